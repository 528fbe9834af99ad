"""Line-level program dependence graphs and prediction explanations.

A Pdg has one node per source line that carries computation, and directed
Control/Data edges between lines. Data edges name the variable they track.
An Explanation attaches per-line importance scores (and a model confidence)
to a function; build_weighted_pdg projects those scores onto the graph.

Types here are containers: except for Explanation, they accept whatever they
are given, and validate_pdg reports structural violations instead of raising,
so malformed graphs can be loaded, inspected, and diagnosed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import IdentityMismatchError, MalformedExplanationError, SchemaError

# Line identifiers are 1-based source line numbers.
LineId = int

SCHEMA_VERSION = "1.0.0"


class DepKind(Enum):
    CONTROL = "control"
    DATA = "data"


@dataclass(frozen=True)
class PdgEdge:
    """A dependency edge between two source lines.

    variable must be present exactly when kind is DATA; validate_pdg reports
    edges that break this rather than the constructor raising, so imported
    graphs can be diagnosed.
    """

    src: LineId
    dst: LineId
    kind: DepKind
    variable: str | None = None

    def sort_key(self) -> tuple:
        return (self.src, self.dst, self.kind.value, self.variable or "")


@dataclass(frozen=True)
class Pdg:
    function_id: str
    nodes: frozenset[LineId]
    edges: tuple[PdgEdge, ...]
    line_text: Mapping[LineId, str] = field(default_factory=dict)
    line_vars: Mapping[LineId, frozenset[str]] = field(default_factory=dict)

    @staticmethod
    def build(
        function_id: str,
        nodes: Iterable[LineId],
        edges: Iterable[PdgEdge],
        line_text: Mapping[LineId, str] | None = None,
        line_vars: Mapping[LineId, Iterable[str]] | None = None,
    ) -> "Pdg":
        """Normalize loose inputs into the frozen container."""
        return Pdg(
            function_id=function_id,
            nodes=frozenset(nodes),
            edges=tuple(edges),
            line_text=dict(line_text or {}),
            line_vars={k: frozenset(v) for k, v in (line_vars or {}).items()},
        )

    def self_loops(self) -> tuple[PdgEdge, ...]:
        """Edges whose endpoints merged onto one line (loop constructs)."""
        return tuple(e for e in self.edges if e.src == e.dst)

    def successors(self, line: LineId) -> frozenset[LineId]:
        return frozenset(e.dst for e in self.edges if e.src == line)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"{self.code}: {self.detail}"


def validate_pdg(pdg: Pdg) -> list[Violation]:
    """Structural check. Empty result means the graph is well formed.

    Self-loops are not violations; they are legal results of line-merging
    loop constructs and are surfaced via Pdg.self_loops().
    """
    out: list[Violation] = []
    for n in sorted(pdg.nodes):
        if not isinstance(n, int) or n < 1:
            out.append(Violation("bad-line-id", f"node {n!r} is not a positive integer"))
    for e in pdg.edges:
        if e.src not in pdg.nodes or e.dst not in pdg.nodes:
            out.append(
                Violation("dangling-endpoint", f"edge {e.src}->{e.dst} touches a missing node")
            )
        if e.kind is DepKind.DATA and not e.variable:
            out.append(Violation("missing-variable", f"data edge {e.src}->{e.dst} has no variable"))
        if e.kind is DepKind.CONTROL and e.variable is not None:
            out.append(
                Violation("unexpected-variable", f"control edge {e.src}->{e.dst} carries a variable")
            )
    for name, mapping in (("line_text", pdg.line_text), ("line_vars", pdg.line_vars)):
        for k in mapping:
            if k not in pdg.nodes:
                out.append(Violation("orphan-line-entry", f"{name} has entry for non-node line {k}"))
    return out


@dataclass(frozen=True)
class Explanation:
    """Per-line importance scores a prediction model assigned to a function."""

    function_id: str
    confidence: float
    entries: tuple[tuple[LineId, float], ...]

    def __post_init__(self):
        seen = set()
        for line, score in self.entries:
            if line in seen:
                raise MalformedExplanationError(
                    f"{self.function_id}: duplicate line {line} in explanation"
                )
            seen.add(line)
            if not isinstance(line, int) or line < 1:
                raise MalformedExplanationError(
                    f"{self.function_id}: bad line id {line!r} in explanation"
                )
            if not math.isfinite(score) or score < 0.0:
                raise MalformedExplanationError(
                    f"{self.function_id}: score {score!r} at line {line} is not finite and non-negative"
                )
        if not (0.0 <= self.confidence <= 1.0):
            raise MalformedExplanationError(
                f"{self.function_id}: confidence {self.confidence!r} outside [0, 1]"
            )

    def lines(self) -> tuple[LineId, ...]:
        return tuple(line for line, _ in self.entries)

    def score_map(self) -> dict[LineId, float]:
        return {line: score for line, score in self.entries}


@dataclass(frozen=True)
class WeightedPdg:
    """A Pdg with explanation scores attached to its resident lines."""

    pdg: Pdg
    weights: Mapping[LineId, float]
    dropped: tuple[LineId, ...]
    normalized: bool


def build_weighted_pdg(pdg: Pdg, expl: Explanation, normalize: bool = True) -> WeightedPdg:
    """Attach explanation scores to PDG nodes.

    Explanation lines absent from the graph are dropped (recorded in order).
    With normalize on, the retained weights are rescaled to sum to 1, unless
    they are all zero, in which case they stay zero.
    """
    if pdg.function_id != expl.function_id:
        raise IdentityMismatchError(
            f"graph is for {pdg.function_id!r} but explanation is for {expl.function_id!r}"
        )
    seen = set()
    for line, _ in expl.entries:
        if line in seen:
            raise MalformedExplanationError(f"duplicate line {line} in explanation")
        seen.add(line)

    weights: dict[LineId, float] = {}
    dropped: list[LineId] = []
    for line, score in expl.entries:
        if line in pdg.nodes:
            weights[line] = score
        else:
            dropped.append(line)
    if normalize:
        total = sum(weights.values())
        if total > 0.0:
            weights = {line: score / total for line, score in weights.items()}
    return WeightedPdg(pdg=pdg, weights=weights, dropped=tuple(dropped), normalized=normalize)


# --- canonical JSON serialization -------------------------------------------
#
# The layout is fixed by schema/pdg_schema.json (shipped with the package).
# Serialization is canonical: nodes sorted by line, edges sorted by
# (src, dst, kind, variable), keys emitted in sorted order, one trailing
# newline. Identical graphs therefore serialize to identical bytes.


def dumps_canonical(document: dict) -> str:
    """Serialize any artifact document deterministically."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def check_schema_version(document: dict, what: str) -> None:
    """Reject artifacts whose major schema version is unknown."""
    version = document.get("schema_version")
    if not isinstance(version, str) or not version:
        raise SchemaError(f"{what}: missing schema_version")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise SchemaError(f"{what}: unsupported schema version {version!r}")


def pdg_to_dict(pdg: Pdg) -> dict:
    nodes = [
        {
            "line": line,
            "text": pdg.line_text.get(line, ""),
            "vars": sorted(pdg.line_vars.get(line, frozenset())),
        }
        for line in sorted(pdg.nodes)
    ]
    edges = [
        {"src": e.src, "dst": e.dst, "kind": e.kind.value, "var": e.variable}
        for e in sorted(pdg.edges, key=PdgEdge.sort_key)
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "function_id": pdg.function_id,
        "nodes": nodes,
        "edges": edges,
    }


def pdg_from_dict(document: dict) -> Pdg:
    check_schema_version(document, "pdg document")
    try:
        function_id = document["function_id"]
        raw_nodes = document["nodes"]
        raw_edges = document["edges"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"pdg document: missing field {exc}") from None
    nodes = set()
    line_text: dict[LineId, str] = {}
    line_vars: dict[LineId, frozenset[str]] = {}
    for entry in raw_nodes:
        line = entry.get("line")
        if not isinstance(line, int):
            raise SchemaError(f"pdg document: node without integer line: {entry!r}")
        if line in nodes:
            raise SchemaError(f"pdg document: duplicate node for line {line}")
        nodes.add(line)
        line_text[line] = entry.get("text", "")
        line_vars[line] = frozenset(entry.get("vars", []))
    edges = []
    for entry in raw_edges:
        try:
            kind = DepKind(entry["kind"])
            edges.append(
                PdgEdge(src=entry["src"], dst=entry["dst"], kind=kind, variable=entry.get("var"))
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"pdg document: bad edge {entry!r} ({exc})") from None
    return Pdg(
        function_id=function_id,
        nodes=frozenset(nodes),
        edges=tuple(edges),
        line_text=line_text,
        line_vars=line_vars,
    )


def pdg_dumps(pdg: Pdg) -> str:
    return dumps_canonical(pdg_to_dict(pdg))


def pdg_loads(text: str) -> Pdg:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"pdg document: not valid JSON ({exc})") from None
    return pdg_from_dict(document)


def explanation_to_dict(expl: Explanation) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "function_id": expl.function_id,
        "confidence": expl.confidence,
        "entries": [{"line": line, "score": score} for line, score in expl.entries],
    }


def explanation_from_dict(document: dict) -> Explanation:
    check_schema_version(document, "explanation document")
    try:
        entries = tuple(
            (entry["line"], float(entry["score"])) for entry in document["entries"]
        )
        return Explanation(
            function_id=document["function_id"],
            confidence=float(document["confidence"]),
            entries=entries,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"explanation document: malformed ({exc})") from None
