"""Majority voting over the per-line classifiers.

A line is a benign candidate when at least half of the classifiers vote for
it: mean(votes) >= 0.5, so a [1, 0] tie resolves to benign. Verdicts are
produced only for explanation lines that are resident in the graph; lines
the graph dropped have no text to classify.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..errors import ClassificationError, TrustvetError, UndefinedInputError
from ..pdg import Explanation, LineId


def ensemble_vote(votes: Sequence[int]) -> int:
    """1 when the benign votes reach half of the ensemble."""
    if len(votes) == 0:
        raise UndefinedInputError("ensemble_vote needs at least one vote")
    if any(v not in (0, 1) for v in votes):
        raise UndefinedInputError(f"votes must be 0 or 1, got {list(votes)!r}")
    return 1 if sum(votes) / len(votes) >= 0.5 else 0


@dataclass(frozen=True)
class BenignVerdict:
    line: LineId
    votes: tuple[int, ...]
    is_benign_candidate: bool


def benign_candidates(
    ensemble: Sequence, expl: Explanation, line_text: Mapping[LineId, str]
) -> dict[LineId, BenignVerdict]:
    """One verdict per explanation line resident in the graph.

    Classifier and adapter failures are re-raised annotated with the line
    being scored, so a batch run can report exactly where it died.
    """
    if len(ensemble) == 0:
        raise UndefinedInputError("benign_candidates needs at least one classifier")
    verdicts: dict[LineId, BenignVerdict] = {}
    for line, _score in expl.entries:
        text = line_text.get(line)
        if text is None:
            continue
        votes = []
        for clf in ensemble:
            try:
                votes.append(clf.classify(text)[0])
            except TrustvetError as exc:
                raise ClassificationError(line, str(exc)) from exc
        verdicts[line] = BenignVerdict(
            line=line, votes=tuple(votes), is_benign_candidate=ensemble_vote(votes) == 1
        )
    return verdicts
