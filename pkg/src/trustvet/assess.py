"""Dependency assessment: is a prediction's evidence actually connected to
anything suspicious?

Given a weighted graph and the ensemble's benign verdicts, an edge x->y is a
vulnerable dependency when some line z, reachable from y through zero or
more graph edges (z = y counts), is not a benign candidate; Data edges must
additionally have their tracked variable involved at z. The
vulnerability-reachability distance between two lines is the length of the
shortest path that uses vulnerable dependencies only. Each benign candidate
is mapped to its nearest non-benign explanation line, and the trust score
accumulates (weight + target weight) / distance over the candidates that
reach one. A prediction is untrustworthy when the score falls below the
threshold.

Two readings of the Data-edge rule are supported: the default "direct" mode
asks whether the edge's variable appears at z; "transitive_flow" also
accepts z when the variable's value can flow from y into z along Data
edges. The connecting sequence itself may traverse edges of either kind.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ContractError, PipelineError, TrustvetError, UnknownEdgeError
from .lineassess.ensemble import BenignVerdict, benign_candidates
from .pdg import (
    DepKind,
    Explanation,
    LineId,
    Pdg,
    PdgEdge,
    WeightedPdg,
    build_weighted_pdg,
)

DIRECT = "direct"
TRANSITIVE_FLOW = "transitive_flow"
_MODES = (DIRECT, TRANSITIVE_FLOW)

UNTRUSTWORTHY = "untrustworthy"
TRUSTWORTHY = "trustworthy"


@dataclass(frozen=True)
class BenignSet:
    """Explanation lines the ensemble voted benign for one function."""

    function_id: str
    members: frozenset[LineId]

    @staticmethod
    def from_verdicts(function_id: str, verdicts: Mapping[LineId, BenignVerdict]) -> "BenignSet":
        return BenignSet(
            function_id=function_id,
            members=frozenset(l for l, v in verdicts.items() if v.is_benign_candidate),
        )


@dataclass(frozen=True)
class ReachRecord:
    """Nearest non-benign explanation line for one benign candidate.

    distance is a positive edge count, or math.inf when no non-benign line
    is reachable (then target and target_score are absent).
    """

    line: LineId
    distance: float
    target: LineId | None
    target_score: float | None


@dataclass(frozen=True)
class Assessment:
    function_id: str
    trust_score: float
    threshold_used: float
    verdict: str
    records: tuple[ReachRecord, ...]
    benign: Mapping[LineId, BenignVerdict]
    degenerate: bool
    warnings: tuple[str, ...]


# --- the vulnerable-dependency predicate ---------------------------------------


def _check_mode(mode: str) -> None:
    if mode not in _MODES:
        raise ContractError(f"unknown data-rule mode {mode!r}; use one of {_MODES}")


def _closure(adjacency: Mapping[LineId, set[LineId]], start: LineId) -> set[LineId]:
    """Nodes reachable from start via zero or more edges (start included)."""
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _adjacency(edges: Sequence[PdgEdge], kind: DepKind | None = None) -> dict[LineId, set[LineId]]:
    adj: dict[LineId, set[LineId]] = {}
    for e in edges:
        if kind is None or e.kind is kind:
            adj.setdefault(e.src, set()).add(e.dst)
    return adj


class _EdgeOracle:
    """Shared reachability closures so batch edge checks stay linear-ish."""

    def __init__(self, pdg: Pdg, benign: frozenset[LineId], mode: str):
        self.pdg = pdg
        self.benign = benign
        self.mode = mode
        self._any_adj = _adjacency(pdg.edges)
        self._data_adj = _adjacency(pdg.edges, DepKind.DATA)
        self._any_closure: dict[LineId, set[LineId]] = {}
        self._data_closure: dict[LineId, set[LineId]] = {}

    def reachable(self, start: LineId) -> set[LineId]:
        if start not in self._any_closure:
            self._any_closure[start] = _closure(self._any_adj, start)
        return self._any_closure[start]

    def data_reachable(self, start: LineId) -> set[LineId]:
        if start not in self._data_closure:
            self._data_closure[start] = _closure(self._data_adj, start)
        return self._data_closure[start]

    def vulnerable(self, edge: PdgEdge) -> bool:
        suspects = self.reachable(edge.dst) - self.benign
        if not suspects:
            return False
        if edge.kind is DepKind.CONTROL:
            return True
        variable = edge.variable
        for z in suspects:
            if variable in self.pdg.line_vars.get(z, frozenset()):
                return True
        if self.mode == TRANSITIVE_FLOW:
            # the value computed at dst can flow into a suspect along Data edges
            if suspects & self.data_reachable(edge.dst):
                return True
        return False


def is_vulnerable_dependency(
    edge: PdgEdge, g: WeightedPdg, benign: BenignSet, mode: str = DIRECT
) -> bool:
    """Table-style predicate for one edge of the graph."""
    _check_mode(mode)
    if edge not in g.pdg.edges:
        raise UnknownEdgeError(f"edge {edge.src}->{edge.dst} ({edge.kind.value}) is not in the graph")
    return _EdgeOracle(g.pdg, benign.members, mode).vulnerable(edge)


def vulnerable_edges(g: WeightedPdg, benign: BenignSet, mode: str = DIRECT) -> tuple[PdgEdge, ...]:
    """All edges that pass the vulnerable-dependency predicate."""
    _check_mode(mode)
    oracle = _EdgeOracle(g.pdg, benign.members, mode)
    return tuple(e for e in g.pdg.edges if oracle.vulnerable(e))


# --- reachability distance ------------------------------------------------------


def _vulnerable_adjacency(
    g: WeightedPdg, benign: BenignSet, mode: str
) -> dict[LineId, set[LineId]]:
    # self-loops never shorten a path and never count toward a distance
    adj: dict[LineId, set[LineId]] = {}
    for e in vulnerable_edges(g, benign, mode):
        if e.src != e.dst:
            adj.setdefault(e.src, set()).add(e.dst)
    return adj


def reachability_distance(
    start: LineId, target: LineId, g: WeightedPdg, benign: BenignSet, mode: str = DIRECT
) -> float:
    """Edge count of the shortest all-vulnerable-dependency path, or inf."""
    _check_mode(mode)
    if start not in benign.members:
        raise ContractError(f"start line {start} is not a benign candidate")
    if target not in g.pdg.nodes:
        raise ContractError(f"target line {target} is not a graph node")
    adj = _vulnerable_adjacency(g, benign, mode)
    return _bfs(adj, start, target)


def _bfs(adj: Mapping[LineId, set[LineId]], start: LineId, target: LineId) -> float:
    if start == target:
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        node, dist = frontier.popleft()
        for nxt in adj.get(node, ()):
            if nxt == target:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return math.inf


# --- nearest non-benign mapping and the trust score ------------------------------


def nearest_non_benign(
    line: LineId, expl: Explanation, g: WeightedPdg, benign: BenignSet, mode: str = DIRECT
) -> ReachRecord:
    """Closest resident explanation line that is not a benign candidate.

    Ties on distance prefer the larger target weight, then the smaller
    LineId. Weights (and target scores) come from the graph's weight map, so
    they are normalized exactly when the graph was built that way.
    """
    _check_mode(mode)
    if line not in benign.members:
        raise ContractError(f"line {line} is not a benign candidate")
    adj = _vulnerable_adjacency(g, benign, mode)
    best: tuple[float, float, LineId] | None = None  # (distance, -weight, line)
    for candidate, _score in expl.entries:
        if candidate == line or candidate in benign.members:
            continue
        if candidate not in g.pdg.nodes:
            continue
        dist = _bfs(adj, line, candidate)
        if math.isinf(dist):
            continue
        weight = g.weights.get(candidate, 0.0)
        key = (dist, -weight, candidate)
        if best is None or key < best:
            best = key
    if best is None:
        return ReachRecord(line=line, distance=math.inf, target=None, target_score=None)
    dist, neg_weight, target = best
    return ReachRecord(line=line, distance=dist, target=target, target_score=-neg_weight)


def trust_score(
    expl: Explanation, g: WeightedPdg, benign: BenignSet, mode: str = DIRECT
) -> float:
    return _score_with_records(expl, g, benign, mode)[0]


def _score_with_records(
    expl: Explanation, g: WeightedPdg, benign: BenignSet, mode: str
) -> tuple[float, tuple[ReachRecord, ...], bool]:
    _check_mode(mode)
    resident = [line for line, _ in expl.entries if line in g.pdg.nodes]
    benign_resident = [line for line in resident if line in benign.members]
    if resident and not benign_resident:
        # every scored line looks vulnerable: maximal agreement with the
        # prediction, so the score is the total retained weight
        total = sum(g.weights.get(line, 0.0) for line in resident)
        return total, (), True
    records = []
    total = 0.0
    for line in benign_resident:
        record = nearest_non_benign(line, expl, g, benign, mode)
        records.append(record)
        if not math.isinf(record.distance) and record.distance > 0:
            total += (g.weights.get(line, 0.0) + (record.target_score or 0.0)) / record.distance
    return total, tuple(records), False


def assess_prediction(
    expl: Explanation,
    pdg: Pdg,
    ensemble: Sequence,
    threshold: float,
    normalize_weights: bool = True,
    mode: str = DIRECT,
) -> Assessment:
    """Full per-function pipeline: weights, votes, distances, verdict."""
    _check_mode(mode)
    warnings: list[str] = []
    try:
        g = build_weighted_pdg(pdg, expl, normalize=normalize_weights)
    except TrustvetError as exc:
        raise PipelineError("weighting", exc) from exc
    if g.dropped:
        warnings.append(
            "explanation lines outside the graph were dropped: "
            + ", ".join(str(line) for line in g.dropped)
        )
    if not g.weights:
        warnings.append("no explanation line is resident in the graph")
    try:
        verdicts = benign_candidates(ensemble, expl, pdg.line_text)
    except TrustvetError as exc:
        raise PipelineError("line-assessment", exc) from exc
    benign = BenignSet.from_verdicts(pdg.function_id, verdicts)
    try:
        score, records, degenerate = _score_with_records(expl, g, benign, mode)
    except TrustvetError as exc:
        raise PipelineError("dependency-assessment", exc) from exc
    if degenerate:
        warnings.append("no resident explanation line is a benign candidate")
    verdict = UNTRUSTWORTHY if score < threshold else TRUSTWORTHY
    return Assessment(
        function_id=pdg.function_id,
        trust_score=score,
        threshold_used=threshold,
        verdict=verdict,
        records=records,
        benign=verdicts,
        degenerate=degenerate,
        warnings=tuple(warnings),
    )


# --- serialization and rendering -------------------------------------------------


def assessment_to_dict(assessment: Assessment, g: WeightedPdg) -> dict:
    """JSON form of an Assessment, with one row per resident explanation line."""
    from .pdg import SCHEMA_VERSION

    by_line = {r.line: r for r in assessment.records}
    rows = []
    for line in sorted(assessment.benign):
        verdict = assessment.benign[line]
        record = by_line.get(line)
        weight = g.weights.get(line, 0.0)
        contribution = 0.0
        distance = None
        target = None
        target_score = None
        if record is not None and not math.isinf(record.distance):
            distance = int(record.distance)
            target = record.target
            target_score = record.target_score
            if distance > 0:
                contribution = (weight + (target_score or 0.0)) / distance
        rows.append(
            {
                "line": line,
                "text": g.pdg.line_text.get(line, ""),
                "weight": weight,
                "benign": verdict.is_benign_candidate,
                "votes": list(verdict.votes),
                "distance": distance,
                "target": target,
                "target_score": target_score,
                "contribution": contribution,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "function_id": assessment.function_id,
        "trust_score": assessment.trust_score,
        "threshold": assessment.threshold_used,
        "verdict": assessment.verdict,
        "degenerate": assessment.degenerate,
        "warnings": list(assessment.warnings),
        "dropped": list(g.dropped),
        "normalized_weights": g.normalized,
        "lines": rows,
    }


def render_assessment(doc: dict) -> str:
    """Human-readable table for one assessment document."""
    out = [
        f"function: {doc['function_id']}",
        f"trust score: {doc['trust_score']:.6f} "
        f"(threshold {doc['threshold']:.6f}) -> {doc['verdict'].upper()}",
    ]
    if doc.get("degenerate"):
        out.append("note: no benign candidate among the scored lines; score is the total weight")
    for warning in doc.get("warnings", []):
        out.append(f"warning: {warning}")
    header = f"{'line':>5}  {'weight':>8}  {'benign':>6}  {'dist':>5}  {'target':>6}  {'contrib':>9}  text"
    out.append(header)
    out.append("-" * len(header))
    for row in doc.get("lines", []):
        if row["benign"]:
            dist = "inf" if row["distance"] is None else str(row["distance"])
            target = "-" if row["target"] is None else str(row["target"])
        else:
            dist, target = "-", "-"
        out.append(
            f"{row['line']:>5}  {row['weight']:>8.4f}  {str(row['benign']).lower():>6}  "
            f"{dist:>5}  {target:>6}  {row['contribution']:>9.4f}  {row['text']}"
        )
    if doc.get("dropped"):
        out.append("dropped (not in graph): " + ", ".join(str(x) for x in doc["dropped"]))
    return "\n".join(out) + "\n"
