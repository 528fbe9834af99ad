"""Source-code frontend: lexing, parsing, and graph interchange."""

from __future__ import annotations

from ..pdg import Pdg
from .graphio import (
    ImportedGraph,
    export_raw_graph,
    import_raw_graph,
    merge_imported_nodes,
    merge_line_nodes,
)
from .lexer import (
    Token,
    TokenKind,
    c_keywords,
    extract_variables,
    is_substantive_line,
    normalize_line,
    tokenize_line,
)
from .parser import RawDepGraph, RawEdge, RawNode, parse_function


def pdg_from_source(source: str, function_id: str | None = None) -> Pdg:
    """Parse source and merge to a line-level Pdg in one step."""
    raw = parse_function(source)
    if function_id is not None:
        raw.function_id = function_id
    return merge_line_nodes(raw, source)


__all__ = [
    "ImportedGraph",
    "RawDepGraph",
    "RawEdge",
    "RawNode",
    "Token",
    "TokenKind",
    "c_keywords",
    "export_raw_graph",
    "extract_variables",
    "import_raw_graph",
    "is_substantive_line",
    "merge_imported_nodes",
    "merge_line_nodes",
    "normalize_line",
    "parse_function",
    "pdg_from_source",
    "tokenize_line",
]
