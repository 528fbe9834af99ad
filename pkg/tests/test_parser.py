"""Parser behavior: dependence edges, control flow shapes, loud failures."""

from __future__ import annotations

import pytest

from trustvet.errors import ParseError, UnsupportedConstructError
from trustvet.frontend import parse_function, pdg_from_source
from trustvet.pdg import DepKind


def edge_set(pdg):
    return {(e.src, e.dst, e.kind, e.variable) for e in pdg.edges}


class TestChains:
    def test_straight_line_dataflow(self, data_dir):
        pdg = pdg_from_source((data_dir / "chain.c").read_text())
        assert pdg.function_id == "chain"
        assert sorted(pdg.nodes) == [1, 3, 4, 5, 6]
        assert edge_set(pdg) == {
            (3, 4, DepKind.DATA, "a"),
            (4, 5, DepKind.DATA, "b"),
            (5, 6, DepKind.DATA, "c"),
        }

    def test_parameter_defines_at_signature(self):
        pdg = pdg_from_source("int inc(int v)\n{\n    return v + 1;\n}\n")
        assert (1, 3, DepKind.DATA, "v") in edge_set(pdg)

    def test_single_line_function(self):
        pdg = pdg_from_source("int f(){ return 0; }")
        assert pdg.nodes == frozenset({1})
        assert pdg.edges == ()


class TestBranches:
    SOURCE = (
        "int pick(int a)\n"
        "{\n"
        "    if (a) {\n"
        "        b = 1;\n"
        "    } else {\n"
        "        b = 2;\n"
        "    }\n"
        "    return b;\n"
        "}\n"
    )

    def test_both_arms_control_dependent(self):
        edges = edge_set(pdg_from_source(self.SOURCE))
        assert (3, 4, DepKind.CONTROL, None) in edges
        assert (3, 6, DepKind.CONTROL, None) in edges

    def test_join_not_control_dependent(self):
        edges = edge_set(pdg_from_source(self.SOURCE))
        assert (3, 8, DepKind.CONTROL, None) not in edges

    def test_both_definitions_reach_join(self):
        edges = edge_set(pdg_from_source(self.SOURCE))
        assert (4, 8, DepKind.DATA, "b") in edges
        assert (6, 8, DepKind.DATA, "b") in edges


class TestLoops:
    SOURCE = (
        "int drain(int n)\n"
        "{\n"
        "    while (n > 0) {\n"
        "        n = n - 1;\n"
        "    }\n"
        "    return n;\n"
        "}\n"
    )

    def test_loop_carried_dependence(self):
        pdg = pdg_from_source(self.SOURCE)
        edges = edge_set(pdg)
        assert (4, 3, DepKind.DATA, "n") in edges  # back edge into the test
        assert (3, 4, DepKind.CONTROL, None) in edges
        assert (4, 6, DepKind.DATA, "n") in edges

    def test_self_loop_retained_and_reported(self):
        pdg = pdg_from_source(self.SOURCE)
        loops = pdg.self_loops()
        assert (4, 4, DepKind.DATA, "n") in {
            (e.src, e.dst, e.kind, e.variable) for e in loops
        }

    def test_for_loop_parses(self):
        source = (
            "int total(int n)\n"
            "{\n"
            "    s = 0;\n"
            "    for (i = 0; i < n; i = i + 1) {\n"
            "        s = s + i;\n"
            "    }\n"
            "    return s;\n"
            "}\n"
        )
        pdg = pdg_from_source(source)
        edges = edge_set(pdg)
        assert (4, 5, DepKind.CONTROL, None) in edges
        assert (5, 7, DepKind.DATA, "s") in edges


class TestDeclarationsAndWrites:
    def test_declaration_with_initializer(self):
        pdg = pdg_from_source("int f(int y)\n{\n    int x = y;\n    return x;\n}\n")
        edges = edge_set(pdg)
        assert (1, 3, DepKind.DATA, "y") in edges
        assert (3, 4, DepKind.DATA, "x") in edges

    def test_member_write_tracks_base(self):
        source = (
            "void fill(struct box *p)\n"
            "{\n"
            "    p->f = 1;\n"
            "    use(p);\n"
            "}\n"
        )
        edges = edge_set(pdg_from_source(source))
        assert (3, 4, DepKind.DATA, "p") in edges

    def test_array_write_tracks_base(self):
        source = "void put(int i)\n{\n    tab[i] = 0;\n    use(tab);\n}\n"
        edges = edge_set(pdg_from_source(source))
        assert (3, 4, DepKind.DATA, "tab") in edges

    def test_compound_assign_is_also_a_use(self):
        source = "int bump(int x)\n{\n    x += 1;\n    return x;\n}\n"
        edges = edge_set(pdg_from_source(source))
        assert (1, 3, DepKind.DATA, "x") in edges
        assert (3, 4, DepKind.DATA, "x") in edges


class TestWorkedExampleShape:
    def test_native_parse_contains_the_six_stated_edges(self, vrrp_native):
        edges = edge_set(vrrp_native)
        required = {
            (1, 3, DepKind.DATA, "data"),
            (3, 4, DepKind.CONTROL, None),
            (3, 5, DepKind.CONTROL, None),
            (3, 7, DepKind.CONTROL, None),
            (7, 8, DepKind.DATA, "file"),
            (8, 9, DepKind.DATA, "count"),
        }
        assert required <= edges

    def test_member_access_is_not_a_dataflow_use(self, vrrp_native):
        # dump_state.data on line 7 must not create a data edge from line 1
        assert (1, 7, DepKind.DATA, "data") not in edge_set(vrrp_native)

    def test_member_access_is_in_the_variable_surface(self, vrrp_native):
        assert "data" in vrrp_native.line_vars[7]


class TestRejections:
    @pytest.mark.parametrize(
        "body,needle",
        [
            ("    goto out;\n", "goto"),
            ("    switch (x) {\n    }\n", "switch"),
            ("    do {\n    } while (x);\n", "do"),
            ("    break;\n", "break"),
            ("    continue;\n", "continue"),
            ("    typedef int t;\n", "typedef"),
        ],
    )
    def test_unsupported_keywords(self, body, needle):
        source = f"void f(int x)\n{{\n{body}}}\n"
        with pytest.raises(UnsupportedConstructError) as err:
            parse_function(source)
        assert needle in str(err.value)
        assert "line 3" in str(err.value)

    def test_preprocessor_rejected(self):
        with pytest.raises(UnsupportedConstructError):
            parse_function("#define X 1\nvoid f(void)\n{\n}\n")

    def test_conditionless_for_rejected(self):
        source = "void f(void)\n{\n    for (;;) {\n    }\n}\n"
        with pytest.raises(UnsupportedConstructError):
            parse_function(source)

    def test_truncated_body(self):
        with pytest.raises(ParseError):
            parse_function("int f(void)\n{\n    x = 1;\n")

    def test_empty_source(self):
        with pytest.raises(ParseError):
            parse_function("")


class TestNodeCarriesFullLine:
    def test_exported_code_is_the_source_line(self, vrrp_source):
        raw = parse_function(vrrp_source)
        by_line = {n.line: n.code for n in raw.nodes}
        assert by_line[3] == "if (!data) {"
        assert by_line[7] == 'file = fopen(dump_state.data, "w");'
