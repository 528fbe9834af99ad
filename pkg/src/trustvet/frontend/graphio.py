"""Line merging and interchange with external graph exporters.

merge_line_nodes collapses a statement-level RawDepGraph to the line-level
Pdg the rest of the pipeline works on. import_raw_graph/export_raw_graph
speak the documented interchange schema, so graphs produced by an external
C analyzer can replace the built-in parser:

    {
      "function": "<function id>",
      "nodes": [{"id": <int>, "line": <int >= 1>, "code": "<source text>"}, ...],
      "edges": [{"src": <node id>, "dst": <node id>,
                 "kind": "CDG" | "DDG" | <other>,
                 "variable": "<name>"}, ...]
    }

"CDG" maps to control dependence and "DDG" (which must carry "variable") to
data dependence. Edges of any other kind, and DDG edges without a variable
label, are dropped and counted; a missing or non-integer "line" on a node is
an error naming the node, because line identity is what everything
downstream keys on.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ImportSchemaError
from ..pdg import DepKind, Pdg, PdgEdge
from .lexer import extract_variables, normalize_line
from .parser import RawDepGraph, RawEdge, RawNode


def merge_line_nodes(raw: RawDepGraph, source: str) -> Pdg:
    """Collapse statement nodes that share a source line into one node.

    Edges are re-pointed at lines and deduplicated; an edge between two
    statements on the same line becomes a self-loop, which is retained (loop
    headers produce them legitimately). line_text gets the normalized source
    line; line_vars gets the identifier surface of the raw line.
    """
    source_lines = source.splitlines()
    line_of: dict[int, int] = {}
    lines: set[int] = set()
    for node in raw.nodes:
        if not isinstance(node.line, int) or node.line < 1:
            raise ImportSchemaError(f"node {node.node_id}: bad line {node.line!r}")
        if node.line > len(source_lines):
            raise ImportSchemaError(
                f"node {node.node_id}: line {node.line} is outside the {len(source_lines)}-line source"
            )
        line_of[node.node_id] = node.line
        lines.add(node.line)

    seen: set[tuple[int, int, DepKind, str | None]] = set()
    edges: list[PdgEdge] = []
    for edge in raw.edges:
        if edge.src not in line_of or edge.dst not in line_of:
            raise ImportSchemaError(
                f"edge {edge.src}->{edge.dst} references an unknown node id"
            )
        key = (line_of[edge.src], line_of[edge.dst], edge.kind, edge.variable)
        if key in seen:
            continue
        seen.add(key)
        edges.append(PdgEdge(key[0], key[1], edge.kind, edge.variable))
    edges.sort(key=PdgEdge.sort_key)

    line_text = {line: normalize_line(source_lines[line - 1]) for line in lines}
    line_vars = {line: extract_variables(source_lines[line - 1]) for line in lines}
    return Pdg(
        function_id=raw.function_id,
        nodes=frozenset(lines),
        edges=tuple(edges),
        line_text=line_text,
        line_vars=line_vars,
    )


def merge_imported_nodes(raw: RawDepGraph) -> Pdg:
    """Line-merge a graph that arrived without its source file.

    Imported nodes carry their own code fragments, so each line's text comes
    from the longest fragment on that line (fragments are substrings of the
    line at worst) and its variable surface is the union over all fragments.
    """
    fragments: dict[int, list[str]] = {}
    for node in raw.nodes:
        if not isinstance(node.line, int) or node.line < 1:
            raise ImportSchemaError(f"node {node.node_id}: bad line {node.line!r}")
        fragments.setdefault(node.line, []).append(node.code)

    line_of = {node.node_id: node.line for node in raw.nodes}
    seen: set[tuple[int, int, DepKind, str | None]] = set()
    edges: list[PdgEdge] = []
    for edge in raw.edges:
        if edge.src not in line_of or edge.dst not in line_of:
            raise ImportSchemaError(
                f"edge {edge.src}->{edge.dst} references an unknown node id"
            )
        key = (line_of[edge.src], line_of[edge.dst], edge.kind, edge.variable)
        if key in seen:
            continue
        seen.add(key)
        edges.append(PdgEdge(key[0], key[1], edge.kind, edge.variable))
    edges.sort(key=PdgEdge.sort_key)

    line_text = {
        line: normalize_line(max(codes, key=len)) for line, codes in fragments.items()
    }
    line_vars = {
        line: frozenset().union(*(extract_variables(code) for code in codes))
        for line, codes in fragments.items()
    }
    return Pdg(
        function_id=raw.function_id,
        nodes=frozenset(fragments),
        edges=tuple(edges),
        line_text=line_text,
        line_vars=line_vars,
    )


@dataclass
class ImportedGraph:
    graph: RawDepGraph
    skipped_edges: int
    messages: tuple[str, ...]

    def to_pdg(self) -> Pdg:
        return merge_imported_nodes(self.graph)


def import_raw_graph(document: dict) -> ImportedGraph:
    """Read an external graph export (schema above) into a RawDepGraph."""
    if not isinstance(document, dict):
        raise ImportSchemaError("graph export must be a JSON object")
    function_id = document.get("function")
    if not isinstance(function_id, str) or not function_id:
        raise ImportSchemaError("graph export: missing or empty 'function'")
    raw_nodes = document.get("nodes")
    raw_edges = document.get("edges")
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise ImportSchemaError("graph export: 'nodes' and 'edges' must be arrays")

    nodes: list[RawNode] = []
    known: set[int] = set()
    for entry in raw_nodes:
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), int):
            raise ImportSchemaError(f"graph export: node without integer 'id': {entry!r}")
        node_id = entry["id"]
        if node_id in known:
            raise ImportSchemaError(f"graph export: duplicate node id {node_id}")
        known.add(node_id)
        line = entry.get("line")
        if not isinstance(line, int) or line < 1:
            raise ImportSchemaError(f"graph export: node {node_id}: missing or bad 'line'")
        code = entry.get("code", "")
        if not isinstance(code, str):
            raise ImportSchemaError(f"graph export: node {node_id}: 'code' must be a string")
        nodes.append(RawNode(node_id, line, code))

    edges: list[RawEdge] = []
    skipped = 0
    messages: list[str] = []
    for entry in raw_edges:
        if not isinstance(entry, dict):
            raise ImportSchemaError(f"graph export: edge is not an object: {entry!r}")
        src, dst = entry.get("src"), entry.get("dst")
        if src not in known or dst not in known:
            raise ImportSchemaError(
                f"graph export: edge {src!r}->{dst!r} references an unknown node id"
            )
        kind = entry.get("kind")
        if kind == "CDG":
            edges.append(RawEdge(src, dst, DepKind.CONTROL))
        elif kind == "DDG":
            variable = entry.get("variable")
            if not isinstance(variable, str) or not variable:
                skipped += 1
                messages.append(f"dropped DDG edge {src}->{dst}: no variable label")
                continue
            edges.append(RawEdge(src, dst, DepKind.DATA, variable))
        else:
            skipped += 1
            messages.append(f"dropped edge {src}->{dst} of unhandled kind {kind!r}")
    return ImportedGraph(
        graph=RawDepGraph(function_id=function_id, nodes=nodes, edges=edges),
        skipped_edges=skipped,
        messages=tuple(messages),
    )


def export_raw_graph(raw: RawDepGraph) -> dict:
    """Write a RawDepGraph in the interchange schema (round-trip partner of
    import_raw_graph)."""
    return {
        "function": raw.function_id,
        "nodes": [{"id": n.node_id, "line": n.line, "code": n.code} for n in raw.nodes],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "kind": "CDG" if e.kind is DepKind.CONTROL else "DDG",
                **({"variable": e.variable} if e.kind is DepKind.DATA else {}),
            }
            for e in raw.edges
        ],
    }
