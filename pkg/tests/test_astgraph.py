import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from m2ts import oracles
from m2ts.astgraph import AstGraph, AstNode, adjacency, build_scales, normalize, parse_mini, power, print_mini
from m2ts.data.toy import PROGRAMS
from m2ts.errors import ConfigError, MiniSyntaxError, StructureError
from m2ts.numerics import Rng
from m2ts.verify import example_graph, random_parents, tree_graph

parent_arrays = st.integers(2, 30).flatmap(
    lambda n: st.tuples(*[st.just(-1)] + [st.integers(0, i - 1) for i in range(1, n)]).map(list))


# -- adjacency ---------------------------------------------------------------

def test_adjacency_single_edge():
    g = AstGraph([AstNode(0, "A"), AstNode(1, "B")], [(0, 1)])
    np.testing.assert_array_equal(adjacency(g), [[0, 1], [1, 0]])


def test_adjacency_example_row_three():
    a = adjacency(example_graph())
    assert set(np.nonzero(a[3])[0]) == {0, 4, 7}


@given(parent_arrays)
@settings(max_examples=100, deadline=None)
def test_adjacency_symmetric_with_degree_row_sums(parents):
    a = adjacency(tree_graph(parents))
    degree = [parents.count(i) + (parents[i] >= 0) for i in range(len(parents))]
    assert np.array_equal(a, a.T)
    assert list(a.sum(axis=1)) == degree
    assert np.all(np.diag(a) == 0)


def test_adjacency_unknown_node():
    g = AstGraph([AstNode(0, "A"), AstNode(1, "B")], [(0, 2)])
    with pytest.raises(StructureError):
        adjacency(g)


# -- powers ------------------------------------------------------------------

def test_power_two_hop_counts_on_example():
    a2 = power(adjacency(example_graph()), 2)
    assert a2[3, 5] == 1
    assert sorted(np.nonzero(a2[3])[0]) == [1, 3, 5, 6, 8]
    assert a2[3, 3] == 3  # one out-and-back walk per neighbour


def test_power_one_is_identity_of_iteration():
    a = adjacency(example_graph())
    np.testing.assert_array_equal(power(a, 1), a)


@pytest.mark.parametrize("m", [0, 6, -1])
def test_power_out_of_range(m):
    with pytest.raises(ConfigError):
        power(adjacency(example_graph()), m)


def test_rooted_tree_counts():
    # unlabeled rooted trees, OEIS A000081
    assert [sum(1 for _ in oracles.rooted_trees(n)) for n in range(1, 11)] == [1, 1, 2, 4, 9, 20, 48, 115, 286, 719]


@pytest.mark.parametrize("n", range(2, 9))
def test_power_matches_walk_enumeration(n):
    for parents in oracles.rooted_trees(n):
        g = tree_graph(parents)
        for m in (1, 2, 3, 4, 5):
            assert np.array_equal(power(adjacency(g), m), oracles.walk_counts(n, g.edges, m))


# -- normalization -----------------------------------------------------------

def test_normalize_single_edge_exact():
    np.testing.assert_array_equal(normalize(np.array([[0, 1], [1, 0]])), np.full((2, 2), 0.5))


def test_normalize_isolated_node():
    a = np.zeros((3, 3), dtype=int)
    a[0, 1] = a[1, 0] = 1
    assert normalize(a)[2, 2] == 1.0
    assert normalize(a)[2, :2].tolist() == [0.0, 0.0]


@given(parent_arrays, st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_normalize_symmetric_bounded_and_matches_elementwise(parents, m):
    a_m = power(adjacency(tree_graph(parents)), m)
    a_hat = normalize(a_m)
    assert a_hat.shape == a_m.shape
    assert np.array_equal(a_hat, a_hat.T)
    assert np.max(np.abs(np.linalg.eigvalsh(a_hat))) <= 1 + 1e-9
    assert np.max(np.abs(a_hat - oracles.normalize_loops(a_m))) <= 1e-15


# -- scale stacks ------------------------------------------------------------

def test_build_scales_count_one():
    g = example_graph()
    stack = build_scales(g, 1)
    assert len(stack) == 1
    np.testing.assert_array_equal(stack[0], normalize(adjacency(g)))


def test_build_scales_third_is_normalized_cube():
    g = example_graph()
    stack = build_scales(g, 3)
    assert all(np.array_equal(s, s.T) for s in stack)
    cube = oracles.walk_counts(g.n, g.edges, 3)
    np.testing.assert_allclose(stack[2], oracles.normalize_loops(cube), rtol=0, atol=1e-15)


def test_build_scales_path_connects_endpoints():
    g = tree_graph([-1, 0, 1])
    assert power(adjacency(g), 2)[0, 2] == 1
    stack = build_scales(g, 2)
    assert stack[0][0, 2] == 0 and stack[1][0, 2] > 0


@pytest.mark.parametrize("count", [0, 6])
def test_build_scales_range(count):
    with pytest.raises(ConfigError):
        build_scales(example_graph(), count)


# -- tree validation ---------------------------------------------------------

@pytest.mark.parametrize("edges", [
    [(0, 1), (1, 2), (2, 1)],      # too many edges, node 1 has two parents
    [(0, 1), (2, 3), (3, 2)],      # cycle away from the root
    [(1, 0), (1, 2), (1, 3)],      # root has a parent
    [(0, 1), (0, 2)],              # node 3 unreachable
])
def test_validate_rejects_non_trees(edges):
    g = AstGraph([AstNode(i, "N") for i in range(4)], edges)
    with pytest.raises(StructureError):
        g.validate()


def test_validate_rejects_bad_ids():
    with pytest.raises(StructureError):
        AstGraph([AstNode(0, "A"), AstNode(2, "B")], [(0, 2)]).validate()


def test_record_round_trip():
    g = parse_mini(PROGRAMS[0][1])
    assert AstGraph.from_record(g.to_record()) == g


def test_permuted_relabels_consistently():
    g = parse_mini("func f(a, b) { return a + b; }")
    order = [0] + list(range(g.n - 1, 0, -1))
    p = g.permuted(order)
    p.validate()
    assert [p.nodes[i].feature for i in range(g.n)] == [g.nodes[o].feature for o in order]
    a, b = adjacency(g), adjacency(p)
    np.testing.assert_array_equal(b, a[np.ix_(order, order)])


def test_random_parents_form_trees():
    for t in range(20):
        tree_graph(random_parents(Rng(t), 15)).validate()


# -- mini-language parser ----------------------------------------------------

def test_parse_return_literal():
    g = parse_mini("func f() { return 0; }")
    assert [(n.type, n.value) for n in g.nodes] == [
        ("FunctionDef", "f"), ("Params", None), ("Block", None), ("Return", None), ("Literal", "0")]
    assert sorted(g.edges) == [(0, 1), (0, 2), (2, 3), (3, 4)]


def test_parse_if_block_return():
    g = parse_mini("func f(a) { if (a) { return a; } }")
    kids = g.children()
    types = [n.type for n in g.nodes]
    if_id = types.index("If")
    blocks = [c for c in kids[if_id] if types[c] == "Block"]
    assert any(types[c] == "Return" for b in blocks for c in kids[b])


def test_parse_empty_source():
    with pytest.raises(MiniSyntaxError):
        parse_mini("")


@pytest.mark.parametrize("source, line", [
    ("func f() { return 0 }", 1),
    ("func f() {\n  x = ;\n}", 2),
    ("func f() { return 0; } extra", 1),
    ("func f() { y = 1 # 2; }", 1),
])
def test_parse_errors_carry_position(source, line):
    with pytest.raises(MiniSyntaxError) as info:
        parse_mini(source)
    assert info.value.line == line


def test_parse_is_deterministic():
    assert parse_mini(PROGRAMS[5][1]) == parse_mini(PROGRAMS[5][1])


@pytest.mark.parametrize("index", range(len(PROGRAMS)))
def test_print_parse_round_trip_on_fixtures(index):
    g = parse_mini(PROGRAMS[index][1])
    assert parse_mini(print_mini(g)) == g
    g.validate()


names = st.sampled_from(["a", "b", "count", "x1", "node_list", "getValue"])


def expressions(depth=2):
    leaves = st.one_of(names, st.integers(0, 99).map(str))
    if depth == 0:
        return leaves
    sub = expressions(depth - 1)
    return st.one_of(
        leaves,
        st.tuples(sub, st.sampled_from(["+", "-", "*", "/", "%", "<", ">=", "==", "!=", "&&", "||"]), sub)
        .map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(names, st.lists(sub, max_size=2)).map(lambda t: f"{t[0]}({', '.join(t[1])})"),
    )


def statements(depth=2):
    simple = st.one_of(
        st.tuples(names, expressions()).map(lambda t: f"{t[0]} = {t[1]};"),
        expressions().map(lambda e: f"return {e};"),
        st.just("return;"),
        st.tuples(names, st.lists(expressions(1), max_size=2)).map(lambda t: f"{t[0]}({', '.join(t[1])});"),
    )
    if depth == 0:
        return simple
    body = st.lists(statements(depth - 1), max_size=3).map(" ".join)
    return st.one_of(
        simple,
        st.tuples(expressions(), body).map(lambda t: f"while ({t[0]}) {{ {t[1]} }}"),
        st.tuples(expressions(), body, st.none() | body).map(
            lambda t: f"if ({t[0]}) {{ {t[1]} }}" + ("" if t[2] is None else f" else {{ {t[2]} }}")),
    )


programs = st.tuples(names, st.lists(names, max_size=3, unique=True), st.lists(statements(), max_size=4)).map(
    lambda t: f"func {t[0]}({', '.join(t[1])}) {{ {' '.join(t[2])} }}")


@given(programs)
@settings(max_examples=150, deadline=None)
def test_parse_total_and_round_trips(source):
    g = parse_mini(source)
    g.validate(min_nodes=3)
    assert [n.id for n in g.nodes] == list(range(g.n))
    assert parse_mini(print_mini(g)) == g
