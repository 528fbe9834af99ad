"""Three independent feature views of a normalized source line.

Each view turns a line into a sparse bag of named features; the ensemble
trains one linear classifier per view so their errors stay decorrelated:

    token_ngram   token uni/bigrams of the normalized line
    char_ngram    character 3-5-grams of the normalized line
    syntax_shape  token-kind uni/bigrams, a length feature, keyword flags
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from ..frontend.lexer import TokenKind, tokenize_line


class FeatureView(Enum):
    TOKEN_NGRAM = "token_ngram"
    CHAR_NGRAM = "char_ngram"
    SYNTAX_SHAPE = "syntax_shape"


ALL_VIEWS = (FeatureView.TOKEN_NGRAM, FeatureView.CHAR_NGRAM, FeatureView.SYNTAX_SHAPE)


@dataclass(frozen=True)
class FeatureVector:
    """Sparse features of one line under one view (index -> value)."""

    view: FeatureView
    indices: Mapping[int, float]


def _token_ngram_features(text: str) -> dict[str, float]:
    texts = [t.text for t in tokenize_line(text)]
    feats: Counter = Counter()
    for t in texts:
        feats[f"1:{t}"] += 1.0
    for a, b in zip(texts, texts[1:]):
        feats[f"2:{a} {b}"] += 1.0
    return dict(feats)


def _char_ngram_features(text: str) -> dict[str, float]:
    feats: Counter = Counter()
    for order in (3, 4, 5):
        for i in range(len(text) - order + 1):
            feats[f"{order}:{text[i : i + order]}"] += 1.0
    return dict(feats)


def _syntax_shape_features(text: str) -> dict[str, float]:
    tokens = tokenize_line(text)
    kinds = [t.kind.value for t in tokens]
    feats: Counter = Counter()
    for k in kinds:
        feats[f"k1:{k}"] += 1.0
    for a, b in zip(kinds, kinds[1:]):
        feats[f"k2:{a} {b}"] += 1.0
    for t in tokens:
        if t.kind is TokenKind.KEYWORD:
            feats[f"kw:{t.text}"] = 1.0
    feats["len"] = len(text) / 80.0
    feats["ntok"] = len(tokens) / 16.0
    return dict(feats)


_EXTRACTORS = {
    FeatureView.TOKEN_NGRAM: _token_ngram_features,
    FeatureView.CHAR_NGRAM: _char_ngram_features,
    FeatureView.SYNTAX_SHAPE: _syntax_shape_features,
}


def extract_features(view: FeatureView, text: str) -> dict[str, float]:
    """Named sparse features of a normalized line under one view."""
    return _EXTRACTORS[view](text)


def vectorize(view: FeatureView, text: str, vocabulary: Mapping[str, int]) -> FeatureVector:
    """Project a line onto a trained vocabulary; unseen features vanish."""
    indices: dict[int, float] = {}
    for name, value in extract_features(view, text).items():
        idx = vocabulary.get(name)
        if idx is not None:
            indices[idx] = indices.get(idx, 0.0) + value
    return FeatureVector(view=view, indices=indices)
