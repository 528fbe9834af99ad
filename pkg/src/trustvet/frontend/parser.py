"""Parse one self-contained C-like function into a raw dependence graph.

Supported statement forms: declarations, assignments, expression/call
statements, if/else, while, for (with a condition), return, and nested
blocks. Anything else (preprocessor lines, do/switch/goto/break/continue,
for loops without a condition) raises UnsupportedConstructError naming the
offending line; structural damage (unbalanced braces, truncated statements)
raises ParseError. Failing loudly is deliberate: a partially parsed function
would produce a silently wrong dependence graph.

The analysis is classical and intraprocedural:
  - control dependence from the post-dominator tree of the statement CFG,
    so code following an early-return branch is governed by the branch
    predicate;
  - data dependence from reaching definitions (def-use chains), tracking the
    base identifier of each written lvalue (writes through "p->f", "p.f" or
    "p[i]" count as writes to "p").
There is no aliasing, no interprocedural flow, and address-of arguments are
treated as plain reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ParseError, UnsupportedConstructError
from ..pdg import DepKind
from .lexer import Token, TokenKind, tokenize_line

_EXIT = -1  # virtual CFG exit

_TYPE_KEYWORDS = {
    "void", "char", "short", "int", "long", "float", "double", "signed",
    "unsigned", "const", "volatile", "static", "extern", "register", "auto",
    "inline", "restrict", "struct", "union", "enum",
}
_UNSUPPORTED_KEYWORDS = {
    "do", "switch", "case", "default", "goto", "break", "continue", "typedef",
}
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}
_MEMBER_OPS = {".", "->"}
_INCDEC_OPS = {"++", "--"}


@dataclass
class RawNode:
    node_id: int
    line: int
    code: str


@dataclass
class RawEdge:
    src: int
    dst: int
    kind: DepKind
    variable: str | None = None


@dataclass
class RawDepGraph:
    """Statement-level dependence graph; nodes may share source lines."""

    function_id: str
    nodes: list[RawNode]
    edges: list[RawEdge]


@dataclass
class _Stmt:
    sid: int
    line: int
    tokens: list[Token]
    role: str  # "entry" | "decl" | "expr" | "return" | "cond"
    defs: set[str] = field(default_factory=set)
    uses: set[str] = field(default_factory=set)


# --- source cleaning ---------------------------------------------------------


def _clean_source(source: str) -> list[str]:
    """Blank out block comments (which may span lines) and reject
    preprocessor lines, returning the cleaned source line by line."""
    lines = source.splitlines()
    cleaned: list[list[str]] = []
    in_block = False
    for lineno, line in enumerate(lines, start=1):
        out: list[str] = []
        i = 0
        n = len(line)
        in_line_comment = False
        while i < n:
            ch = line[i]
            if in_block:
                if ch == "*" and i + 1 < n and line[i + 1] == "/":
                    in_block = False
                    out.append("  ")
                    i += 2
                    continue
                out.append(" ")
                i += 1
                continue
            if in_line_comment:
                out.append(" ")
                i += 1
                continue
            if ch == "/" and i + 1 < n and line[i + 1] == "*":
                in_block = True
                out.append("  ")
                i += 2
                continue
            if ch == "/" and i + 1 < n and line[i + 1] == "/":
                in_line_comment = True
                out.append("  ")
                i += 2
                continue
            if ch in "\"'":
                quote = ch
                out.append(ch)
                i += 1
                while i < n:
                    out.append(line[i])
                    if line[i] == "\\" and i + 1 < n:
                        out.append(line[i + 1])
                        i += 2
                        continue
                    if line[i] == quote:
                        i += 1
                        break
                    i += 1
                continue
            out.append(ch)
            i += 1
        text = "".join(out)
        stripped = text.lstrip()
        if stripped.startswith("#"):
            raise UnsupportedConstructError("preprocessor directives are not supported", lineno)
        if "#" in text:
            raise UnsupportedConstructError("'#' outside a comment or literal", lineno)
        cleaned.append(text)
    return cleaned


# --- def/use extraction ------------------------------------------------------


def _match_group(tokens: list[Token], i: int, open_text: str, close_text: str) -> int:
    """Index just past the punct group opened at tokens[i]."""
    depth = 0
    j = i
    while j < len(tokens):
        t = tokens[j]
        if t.kind is TokenKind.PUNCT:
            if t.text == open_text:
                depth += 1
            elif t.text == close_text:
                depth -= 1
                if depth == 0:
                    return j + 1
        j += 1
    raise ParseError(f"unbalanced '{open_text}' in expression")


def _scan_expr(tokens: list[Token]) -> tuple[set[str], set[str]]:
    """Defs and uses of an expression token slice.

    An identifier chain (name plus subscripts/member accesses) followed by an
    assignment operator defines its base identifier; compound assignments and
    ++/-- also use it. Called-function names and member names are neither.
    """
    defs: set[str] = set()
    uses: set[str] = set()
    i = 0
    n = len(tokens)
    while i < n:
        t = tokens[i]
        if t.kind is not TokenKind.IDENTIFIER:
            i += 1
            continue
        prev = tokens[i - 1] if i > 0 else None
        if prev is not None and prev.kind is TokenKind.OPERATOR and prev.text in _MEMBER_OPS:
            i += 1  # member name, not a variable
            continue
        nxt = tokens[i + 1] if i + 1 < n else None
        if nxt is not None and nxt.kind is TokenKind.PUNCT and nxt.text == "(":
            i += 1  # called-function name
            continue
        name = t.text
        # swallow the postfix chain: subscripts contribute uses, member names vanish
        j = i + 1
        while j < n:
            tj = tokens[j]
            if tj.kind is TokenKind.PUNCT and tj.text == "[":
                end = _match_group(tokens, j, "[", "]")
                d2, u2 = _scan_expr(tokens[j + 1 : end - 1])
                defs |= d2
                uses |= u2
                j = end
            elif (
                tj.kind is TokenKind.OPERATOR
                and tj.text in _MEMBER_OPS
                and j + 1 < n
                and tokens[j + 1].kind is TokenKind.IDENTIFIER
            ):
                j += 2
            else:
                break
        after = tokens[j] if j < n else None
        if after is not None and after.kind is TokenKind.OPERATOR and after.text in _ASSIGN_OPS:
            defs.add(name)
            if after.text != "=":
                uses.add(name)
            i = j + 1
            continue
        if after is not None and after.kind is TokenKind.OPERATOR and after.text in _INCDEC_OPS:
            defs.add(name)
            uses.add(name)
            i = j + 1
            continue
        if prev is not None and prev.kind is TokenKind.OPERATOR and prev.text in _INCDEC_OPS:
            defs.add(name)
            uses.add(name)
            i = j
            continue
        uses.add(name)
        i = j
    return defs, uses


def _split_top_level(tokens: list[Token], sep_text: str) -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    for t in tokens:
        if t.kind is TokenKind.PUNCT:
            if t.text in "([{":
                depth += 1
            elif t.text in ")]}":
                depth -= 1
            elif t.text == sep_text and depth == 0:
                parts.append([])
                continue
        parts[-1].append(t)
    return parts


def _is_declaration(tokens: list[Token]) -> bool:
    if not tokens:
        return False
    t0 = tokens[0]
    if t0.kind is TokenKind.KEYWORD and t0.text in _TYPE_KEYWORDS:
        return True
    # typedef'd type: IDENT '*'* IDENT followed by '=' ',' '[' or statement end
    if t0.kind is not TokenKind.IDENTIFIER:
        return False
    j = 1
    while j < len(tokens) and tokens[j].kind is TokenKind.OPERATOR and tokens[j].text == "*":
        j += 1
    if j < len(tokens) and tokens[j].kind is TokenKind.IDENTIFIER:
        after = tokens[j + 1] if j + 1 < len(tokens) else None
        return after is None or after.text in {"=", ",", "["}
    return False


def _scan_decl(tokens: list[Token]) -> tuple[set[str], set[str]]:
    """Defs and uses of a declaration (leading type stripped, then one
    declarator per top-level comma)."""
    i = 0
    n = len(tokens)
    while i < n and tokens[i].kind is TokenKind.KEYWORD and tokens[i].text in _TYPE_KEYWORDS:
        if tokens[i].text in {"struct", "union", "enum"} and i + 1 < n and tokens[i + 1].kind is TokenKind.IDENTIFIER:
            i += 2
        else:
            i += 1
    if i < n and tokens[i].kind is TokenKind.IDENTIFIER:
        # typedef'd type name: skip it when another identifier follows the stars
        j = i + 1
        while j < n and tokens[j].kind is TokenKind.OPERATOR and tokens[j].text == "*":
            j += 1
        if j < n and tokens[j].kind is TokenKind.IDENTIFIER:
            i += 1
    defs: set[str] = set()
    uses: set[str] = set()
    for declarator in _split_top_level(tokens[i:], ","):
        k = 0
        m = len(declarator)
        while k < m and declarator[k].kind is TokenKind.OPERATOR and declarator[k].text == "*":
            k += 1
        if k >= m or declarator[k].kind is not TokenKind.IDENTIFIER:
            continue
        defs.add(declarator[k].text)
        k += 1
        while k < m and declarator[k].kind is TokenKind.PUNCT and declarator[k].text == "[":
            end = _match_group(declarator, k, "[", "]")
            _, u2 = _scan_expr(declarator[k + 1 : end - 1])
            uses |= u2
            k = end
        if k < m and declarator[k].kind is TokenKind.OPERATOR and declarator[k].text == "=":
            d2, u2 = _scan_expr(declarator[k + 1 :])
            defs |= d2
            uses |= u2
    return defs, uses


# --- recursive-descent statement parser --------------------------------------


class _Parser:
    def __init__(self, stream: list[tuple[int, Token]]):
        self.stream = stream
        self.i = 0
        self.next_sid = 0
        self.stmts: list[_Stmt] = []

    def peek(self) -> tuple[int, Token] | None:
        return self.stream[self.i] if self.i < len(self.stream) else None

    def advance(self) -> tuple[int, Token]:
        item = self.stream[self.i]
        self.i += 1
        return item

    def expect_punct(self, text: str) -> int:
        item = self.peek()
        if item is None:
            raise ParseError(f"expected '{text}' but reached end of input")
        line, tok = item
        if tok.kind is not TokenKind.PUNCT or tok.text != text:
            raise ParseError(f"line {line}: expected '{text}', found '{tok.text}'")
        self.advance()
        return line

    def make_stmt(self, line: int, tokens: list[Token], role: str) -> _Stmt:
        stmt = _Stmt(self.next_sid, line, tokens, role)
        self.next_sid += 1
        if role == "entry":
            pass  # defs assigned by caller (parameters)
        elif role == "decl":
            stmt.defs, stmt.uses = _scan_decl(tokens)
        elif role == "return":
            _, stmt.uses = _scan_expr(tokens[1:])  # skip the keyword
        else:
            stmt.defs, stmt.uses = _scan_expr(tokens)
        self.stmts.append(stmt)
        return stmt

    def collect_until_semicolon(self) -> tuple[int, list[Token]]:
        """Tokens of one simple statement, excluding the terminating ';'."""
        item = self.peek()
        if item is None:
            raise ParseError("expected a statement but reached end of input")
        first_line = item[0]
        tokens: list[Token] = []
        depth = 0
        while True:
            item = self.peek()
            if item is None:
                raise ParseError(f"line {first_line}: statement is missing its ';'")
            line, tok = item
            if tok.kind is TokenKind.PUNCT:
                if tok.text in "([{":
                    depth += 1
                elif tok.text in ")]}":
                    if depth == 0:
                        raise ParseError(f"line {line}: unexpected '{tok.text}' inside a statement")
                    depth -= 1
                elif tok.text == ";" and depth == 0:
                    self.advance()
                    return first_line, tokens
            tokens.append(tok)
            self.advance()

    def collect_paren_group(self) -> tuple[int, list[Token]]:
        """Contents of a parenthesized group, excluding the parens."""
        line = self.expect_punct("(")
        tokens: list[Token] = []
        depth = 1
        while True:
            item = self.peek()
            if item is None:
                raise ParseError(f"line {line}: unbalanced '(' ")
            tline, tok = item
            if tok.kind is TokenKind.PUNCT:
                if tok.text == "(":
                    depth += 1
                elif tok.text == ")":
                    depth -= 1
                    if depth == 0:
                        self.advance()
                        return line, tokens
            tokens.append(tok)
            self.advance()

    def parse_block(self) -> list:
        self.expect_punct("{")
        items: list = []
        while True:
            item = self.peek()
            if item is None:
                raise ParseError("unbalanced '{': reached end of input inside a block")
            _, tok = item
            if tok.kind is TokenKind.PUNCT and tok.text == "}":
                self.advance()
                return items
            parsed = self.parse_statement()
            if parsed is not None:
                items.append(parsed)

    def parse_statement(self):
        item = self.peek()
        if item is None:
            raise ParseError("expected a statement but reached end of input")
        line, tok = item
        if tok.kind is TokenKind.PUNCT and tok.text == "{":
            return ("block", self.parse_block())
        if tok.kind is TokenKind.PUNCT and tok.text == ";":
            self.advance()
            return None
        if tok.kind is TokenKind.KEYWORD:
            if tok.text in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedConstructError(f"'{tok.text}' statements are not supported", line)
            if tok.text == "if":
                self.advance()
                _, cond_toks = self.collect_paren_group()
                cond = self.make_stmt(line, cond_toks, "cond")
                then_items = self._statement_as_list()
                else_items = None
                nxt = self.peek()
                if nxt is not None and nxt[1].kind is TokenKind.KEYWORD and nxt[1].text == "else":
                    self.advance()
                    else_items = self._statement_as_list()
                return ("if", cond, then_items, else_items)
            if tok.text == "while":
                self.advance()
                _, cond_toks = self.collect_paren_group()
                cond = self.make_stmt(line, cond_toks, "cond")
                body = self._statement_as_list()
                return ("while", cond, body)
            if tok.text == "for":
                self.advance()
                _, group = self.collect_paren_group()
                parts = _split_top_level(group, ";")
                if len(parts) != 3:
                    raise UnsupportedConstructError(
                        "for header must have exactly two ';' separators", line
                    )
                init_toks, cond_toks, step_toks = parts
                if not cond_toks:
                    raise UnsupportedConstructError(
                        "for loops without a condition are not supported", line
                    )
                init = None
                if init_toks:
                    role = "decl" if _is_declaration(init_toks) else "expr"
                    init = self.make_stmt(line, init_toks, role)
                cond = self.make_stmt(line, cond_toks, "cond")
                step = self.make_stmt(line, step_toks, "expr") if step_toks else None
                body = self._statement_as_list()
                return ("for", init, cond, step, body)
            if tok.text == "return":
                first_line, toks = self.collect_until_semicolon()
                return ("stmt", self.make_stmt(first_line, toks, "return"))
            if tok.text == "else":
                raise ParseError(f"line {line}: 'else' without a matching 'if'")
        first_line, toks = self.collect_until_semicolon()
        if not toks:
            return None
        role = "decl" if _is_declaration(toks) else "expr"
        return ("stmt", self.make_stmt(first_line, toks, role))

    def _statement_as_list(self) -> list:
        parsed = self.parse_statement()
        if parsed is None:
            return []
        if parsed[0] == "block":
            return parsed[1]
        return [parsed]


# --- CFG construction and analyses -------------------------------------------


def _wire_cfg(items: list, entry_sid: int, cfg_edges: set[tuple[int, int]]) -> None:
    def connect(ends: list[int], target: int) -> None:
        for e in ends:
            cfg_edges.add((e, target))

    def wire_seq(seq: list, ends: list[int]) -> list[int]:
        for item in seq:
            ends = wire_item(item, ends)
        return ends

    def wire_item(item, ends: list[int]) -> list[int]:
        tag = item[0]
        if tag == "stmt":
            stmt = item[1]
            connect(ends, stmt.sid)
            if stmt.role == "return":
                cfg_edges.add((stmt.sid, _EXIT))
                return []
            return [stmt.sid]
        if tag == "block":
            return wire_seq(item[1], ends)
        if tag == "if":
            _, cond, then_items, else_items = item
            connect(ends, cond.sid)
            t_ends = wire_seq(then_items, [cond.sid])
            if else_items is None:
                return t_ends + [cond.sid]
            e_ends = wire_seq(else_items, [cond.sid])
            return t_ends + e_ends
        if tag == "while":
            _, cond, body = item
            connect(ends, cond.sid)
            b_ends = wire_seq(body, [cond.sid])
            connect(b_ends, cond.sid)
            return [cond.sid]
        if tag == "for":
            _, init, cond, step, body = item
            cur = ends
            if init is not None:
                connect(cur, init.sid)
                cur = [init.sid]
            connect(cur, cond.sid)
            b_ends = wire_seq(body, [cond.sid])
            if step is not None:
                connect(b_ends, step.sid)
                b_ends = [step.sid]
            connect(b_ends, cond.sid)
            return [cond.sid]
        raise AssertionError(f"unknown item {tag!r}")

    final_ends = wire_seq(items, [entry_sid])
    connect(final_ends, _EXIT)


def _post_dominators(all_sids: list[int], succ: dict[int, set[int]]) -> dict[int, set[int]]:
    nodes = all_sids + [_EXIT]
    universe = set(nodes)
    pdom: dict[int, set[int]] = {n: set(universe) for n in nodes}
    pdom[_EXIT] = {_EXIT}
    changed = True
    while changed:
        changed = False
        for n in all_sids:
            succs = succ.get(n, set())
            if succs:
                new = set.intersection(*(pdom[s] for s in succs))
            else:
                new = set()
            new.add(n)
            if new != pdom[n]:
                pdom[n] = new
                changed = True
    return pdom


def _immediate_pdom(pdom: dict[int, set[int]]) -> dict[int, int | None]:
    ipdom: dict[int, int | None] = {}
    for n, doms in pdom.items():
        strict = doms - {n}
        if not strict:
            ipdom[n] = None
            continue
        # the nearest strict post-dominator has the largest pdom set
        ipdom[n] = max(strict, key=lambda d: (len(pdom[d]), d))
    return ipdom


def _control_dependence(
    stmts: list[_Stmt], succ: dict[int, set[int]]
) -> set[tuple[int, int]]:
    """Pairs (predicate sid, dependent sid) via the classic post-dominance
    frontier walk."""
    all_sids = [s.sid for s in stmts]
    pdom = _post_dominators(all_sids, succ)
    ipdom = _immediate_pdom(pdom)
    deps: set[tuple[int, int]] = set()
    for a in all_sids:
        succs = succ.get(a, set())
        if len(succs) < 2:
            continue
        stop = ipdom.get(a)
        for s in succs:
            runner = s
            seen: set[int] = set()
            while runner != stop and runner != _EXIT and runner not in seen:
                seen.add(runner)
                deps.add((a, runner))
                nxt = ipdom.get(runner)
                if nxt is None:
                    break
                runner = nxt
    return deps


def _reaching_definitions(
    stmts: list[_Stmt], succ: dict[int, set[int]]
) -> set[tuple[int, int, str]]:
    """Def-use chains as (def sid, use sid, variable)."""
    by_sid = {s.sid: s for s in stmts}
    defs_of_var: dict[str, set[int]] = {}
    for s in stmts:
        for v in s.defs:
            defs_of_var.setdefault(v, set()).add(s.sid)
    preds: dict[int, set[int]] = {}
    for a, bs in succ.items():
        for b in bs:
            preds.setdefault(b, set()).add(a)
    gen = {s.sid: {(v, s.sid) for v in s.defs} for s in stmts}
    out_sets: dict[int, set[tuple[str, int]]] = {s.sid: set(gen[s.sid]) for s in stmts}
    in_sets: dict[int, set[tuple[str, int]]] = {s.sid: set() for s in stmts}
    work = [s.sid for s in stmts]
    while work:
        sid = work.pop(0)
        new_in = set()
        for p in preds.get(sid, set()):
            if p in out_sets:
                new_in |= out_sets[p]
        in_sets[sid] = new_in
        stmt = by_sid[sid]
        killed = {(v, d) for (v, d) in new_in if v in stmt.defs}
        new_out = gen[sid] | (new_in - killed)
        if new_out != out_sets[sid]:
            out_sets[sid] = new_out
            for nxt in succ.get(sid, set()):
                if nxt != _EXIT and nxt not in work:
                    work.append(nxt)
    chains: set[tuple[int, int, str]] = set()
    for s in stmts:
        for v in s.uses:
            for (var, d) in in_sets[s.sid]:
                if var == v:
                    chains.add((d, s.sid, v))
    return chains


# --- signature handling -------------------------------------------------------


def _split_signature(stream: list[tuple[int, Token]]) -> tuple[list[tuple[int, Token]], int]:
    """Split off the signature: everything before the first top-level '{'."""
    depth = 0
    for idx, (line, tok) in enumerate(stream):
        if tok.kind is TokenKind.PUNCT:
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif tok.text == "{" and depth == 0:
                return stream[:idx], idx
    raise ParseError("no function body found (missing '{')")


def _signature_info(sig: list[tuple[int, Token]]) -> tuple[str, list[str], int]:
    """Function name, parameter names, and the signature's first line."""
    if not sig:
        raise ParseError("empty function signature")
    first_line = sig[0][0]
    tokens = [tok for _, tok in sig]
    open_idx = None
    for idx, tok in enumerate(tokens):
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            open_idx = idx
            break
    if open_idx is None or open_idx == 0:
        raise ParseError(f"line {first_line}: signature has no parameter list")
    name_tok = tokens[open_idx - 1]
    if name_tok.kind is not TokenKind.IDENTIFIER:
        raise ParseError(f"line {first_line}: cannot find the function name in the signature")
    end_idx = _match_group(tokens, open_idx, "(", ")")
    params: list[str] = []
    inner = tokens[open_idx + 1 : end_idx - 1]
    for part in _split_top_level(inner, ","):
        idents = [t.text for t in part if t.kind is TokenKind.IDENTIFIER]
        if not part or (len(part) == 1 and part[0].kind is TokenKind.KEYWORD and part[0].text == "void"):
            continue
        if idents:
            params.append(idents[-1])
    return name_tok.text, params, first_line


# --- entry point ---------------------------------------------------------------


def parse_function(source: str) -> RawDepGraph:
    """Parse one function and return its statement-level dependence graph."""
    cleaned = _clean_source(source)
    stream: list[tuple[int, Token]] = []
    for lineno, text in enumerate(cleaned, start=1):
        for tok in tokenize_line(text):
            stream.append((lineno, tok))
    if not stream:
        raise ParseError("no tokens in source")

    sig, body_start = _split_signature(stream)
    name, params, sig_line = _signature_info(sig)

    parser = _Parser(stream[body_start:])
    entry = parser.make_stmt(sig_line, [tok for _, tok in sig], "entry")
    entry.defs = set(params)
    items = parser.parse_block()
    leftover = parser.peek()
    if leftover is not None:
        if not all(
            tok.kind is TokenKind.PUNCT and tok.text == ";" for _, tok in parser.stream[parser.i :]
        ):
            raise ParseError(
                f"line {leftover[0]}: unexpected tokens after the function body"
            )

    cfg_edges: set[tuple[int, int]] = set()
    _wire_cfg(items, entry.sid, cfg_edges)
    succ: dict[int, set[int]] = {}
    for a, b in cfg_edges:
        succ.setdefault(a, set()).add(b)

    control = _control_dependence(parser.stmts, succ)
    chains = _reaching_definitions(parser.stmts, succ)

    # the node carries its whole source line, so an export/import round trip
    # reconstructs the same per-line text and variable surface
    nodes = [RawNode(s.sid, s.line, cleaned[s.line - 1].strip()) for s in parser.stmts]
    edges: list[RawEdge] = []
    for a, w in sorted(control):
        edges.append(RawEdge(a, w, DepKind.CONTROL))
    for d, u, v in sorted(chains):
        edges.append(RawEdge(d, u, DepKind.DATA, v))
    return RawDepGraph(function_id=name, nodes=nodes, edges=edges)
