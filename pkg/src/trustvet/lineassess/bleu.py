"""BLEU similarity between one candidate line and a set of reference lines.

Used to throw away sampled negative lines that look too much like known
vulnerable lines. The score is the geometric mean of clipped modified n-gram
precisions for orders 1..max_order, times a brevity penalty against the
closest reference length. Orders for which the candidate has no n-grams are
skipped, and an additive epsilon keeps the log of a zero precision finite:

    p_n = (clipped_matches_n + eps) / (candidate_ngrams_n + eps)

so an exact self-match still scores exactly 1.0 while a fully disjoint pair
scores ~eps instead of 0.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from ..errors import UndefinedInputError
from ..frontend.lexer import Token

EPSILON = 1e-9


def _texts(tokens: Sequence) -> list[str]:
    return [t.text if isinstance(t, Token) else str(t) for t in tokens]


def _ngrams(texts: list[str], order: int) -> Counter:
    return Counter(tuple(texts[i : i + order]) for i in range(len(texts) - order + 1))


def bleu(candidate: Sequence, references: Sequence[Sequence], max_order: int = 4) -> float:
    """BLEU of one candidate against one or more references.

    Tokens may be lexer Tokens or plain strings; comparison is by token text.
    An empty candidate is undefined input. With no references the score is
    0.0 by convention (there is nothing to resemble).
    """
    if max_order < 1:
        raise UndefinedInputError(f"max_order must be >= 1, got {max_order}")
    cand = _texts(candidate)
    if not cand:
        raise UndefinedInputError("bleu is undefined for an empty candidate")
    refs = [_texts(r) for r in references]
    if not refs:
        return 0.0

    log_sum = 0.0
    orders_used = 0
    for order in range(1, max_order + 1):
        cand_ngrams = _ngrams(cand, order)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue
        max_ref = Counter()
        for ref in refs:
            for gram, count in _ngrams(ref, order).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        clipped = sum(min(count, max_ref[gram]) for gram, count in cand_ngrams.items())
        log_sum += math.log((clipped + EPSILON) / (total + EPSILON))
        orders_used += 1
    if orders_used == 0:
        return 0.0
    geo_mean = math.exp(log_sum / orders_used)

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda L: (abs(L - c), L))
    penalty = 1.0 if c >= r else math.exp(1.0 - r / c)
    return penalty * geo_mean
