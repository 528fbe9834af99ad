"""Line dataset construction for the benign-line classifiers.

Positives are lines a security fix deleted or modified. Negatives are lines
sampled from functions with no known vulnerability, then screened: any
sampled line whose BLEU similarity to the vulnerable set reaches the
threshold is discarded, because a near-copy of a vulnerable line teaches the
classifier nothing and poisons the negative class.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from ..corpus import NON_VULNERABLE, VULNERABLE, CorpusRecord
from ..errors import DiffMismatchError, InsufficientDataError, SchemaError
from ..frontend.lexer import is_substantive_line, normalize_line, tokenize_line
from ..pdg import SCHEMA_VERSION, check_schema_version
from .bleu import bleu
from .diffs import extract_vulnerable_lines


class LineLabel(Enum):
    VULNERABLE = "vulnerable"
    NON_VULNERABLE = "non-vulnerable"


@dataclass(frozen=True)
class Origin:
    function_id: str
    line: int


@dataclass(frozen=True)
class LineSample:
    """One normalized source line with a label and its provenance."""

    text: str
    label: LineLabel
    origin: Origin

    def __post_init__(self):
        if not self.text:
            raise SchemaError(f"{self.origin}: empty line sample")


def make_sample(raw_text: str, label: LineLabel, origin: Origin) -> LineSample | None:
    """Normalize and wrap a raw line; None when nothing is left."""
    text = normalize_line(raw_text)
    if not text:
        return None
    return LineSample(text=text, label=label, origin=origin)


def vulnerable_samples(record: CorpusRecord) -> list[LineSample]:
    """Positive samples for one vulnerable function (diff- or list-based)."""
    if record.diff is not None:
        lines = extract_vulnerable_lines(record.source, record.diff)
    elif record.vul_lines:
        lines = frozenset(record.vul_lines)
    else:
        raise DiffMismatchError(
            f"record {record.function_id}: vulnerable but has neither diff nor vul_lines"
        )
    source_lines = record.source.splitlines()
    out: list[LineSample] = []
    for line in sorted(lines):
        if line > len(source_lines):
            raise DiffMismatchError(
                f"record {record.function_id}: vulnerable line {line} is outside the source"
            )
        raw = source_lines[line - 1]
        if not is_substantive_line(raw):
            continue
        sample = make_sample(raw, LineLabel.VULNERABLE, Origin(record.function_id, line))
        if sample is not None:
            out.append(sample)
    return out


def sample_candidate_negatives(
    records: Sequence[CorpusRecord], n: int, seed: int
) -> list[LineSample]:
    """Uniform sample, without replacement, of substantive lines drawn from
    the non-vulnerable functions of a corpus."""
    pool: list[tuple[str, int, str]] = []
    for record in records:
        if record.label != NON_VULNERABLE:
            continue
        for lineno, raw in enumerate(record.source.splitlines(), start=1):
            if is_substantive_line(raw):
                pool.append((record.function_id, lineno, raw))
    if n > len(pool):
        raise InsufficientDataError(
            f"asked for {n} candidate negatives but the pool has {len(pool)} lines"
        )
    rng = random.Random(seed)
    picked = rng.sample(pool, n)
    out: list[LineSample] = []
    for function_id, lineno, raw in picked:
        sample = make_sample(raw, LineLabel.NON_VULNERABLE, Origin(function_id, lineno))
        if sample is not None:
            out.append(sample)
    return out


def filter_negatives(
    candidates: Iterable[LineSample],
    vulnerable: Sequence[LineSample],
    threshold: float = 0.5,
    max_order: int = 4,
) -> list[LineSample]:
    """Keep candidates strictly below the BLEU threshold against the
    vulnerable set. Idempotent: filtering a filtered list changes nothing."""
    references = [tokenize_line(v.text) for v in vulnerable]
    kept: list[LineSample] = []
    for cand in candidates:
        score = bleu(tokenize_line(cand.text), references, max_order)
        if score < threshold:
            kept.append(cand)
    return kept


def build_line_dataset(
    records: Sequence[CorpusRecord],
    seed: int,
    neg_ratio: float = 1.0,
    bleu_threshold: float = 0.5,
    bleu_order: int = 4,
) -> tuple[list[LineSample], dict[str, int]]:
    """The full ingestion step: positives from every vulnerable record,
    negatives sampled at neg_ratio times the positive count and then
    BLEU-screened. Returns the samples plus a summary of the counts."""
    positives: list[LineSample] = []
    for record in records:
        if record.label == VULNERABLE:
            positives.extend(vulnerable_samples(record))
    target = math.ceil(neg_ratio * len(positives))
    pool_size = sum(
        1
        for record in records
        if record.label == NON_VULNERABLE
        for raw in record.source.splitlines()
        if is_substantive_line(raw)
    )
    target = min(target, pool_size)
    candidates = sample_candidate_negatives(records, target, seed)
    negatives = filter_negatives(candidates, positives, bleu_threshold, bleu_order)
    counts = {
        "vulnerable": len(positives),
        "candidate_negatives": len(candidates),
        "bleu_filtered": len(candidates) - len(negatives),
        "negatives": len(negatives),
    }
    return positives + negatives, counts


# --- dataset persistence (JSONL) ---------------------------------------------


def save_line_dataset(samples: Sequence[LineSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema_version": SCHEMA_VERSION, "kind": "line-dataset"}) + "\n")
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "text": s.text,
                        "label": s.label.value,
                        "function_id": s.origin.function_id,
                        "line": s.origin.line,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_line_dataset(path: str | Path) -> list[LineSample]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    check_schema_version(header, f"{path} header")
    if header.get("kind") != "line-dataset":
        raise SchemaError(f"{path}: not a line dataset")
    samples: list[LineSample] = []
    for idx, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
            samples.append(
                LineSample(
                    text=doc["text"],
                    label=LineLabel(doc["label"]),
                    origin=Origin(doc["function_id"], doc["line"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"{path}:{idx}: malformed sample ({exc})") from None
    return samples
