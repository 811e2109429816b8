"""Graph structure tests: cliques, decomposability, perfect orderings.

Small-graph results are checked against brute-force enumeration so the
fast implementations never serve as their own oracle.
"""
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwcheck import graphs
from gwcheck.graphs import (
    Graph,
    complete_graph,
    induced_subgraph,
    is_clique,
    is_decomposable,
    maximal_cliques,
    neighbors,
    parse_graph_text,
    perfect_ordering,
)


# ---------------------------------------------------------------- oracles

def bf_is_clique(g, nodes):
    nodes = sorted(set(nodes))
    return all(g.has_edge(u, v) for u, v in itertools.combinations(nodes, 2))


def bf_maximal_cliques(g):
    """All maximal cliques by exhaustive subset enumeration (p <= ~12)."""
    verts = range(1, g.p + 1)
    cliques = []
    for r in range(1, g.p + 1):
        for sub in itertools.combinations(verts, r):
            if bf_is_clique(g, sub):
                cliques.append(frozenset(sub))
    maximal = [c for c in cliques if not any(c < other for other in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


def bf_is_perfect(g, order):
    """Definitional check: at each step the earlier neighbors form a clique."""
    pos = {v: k for k, v in enumerate(order)}
    for v in order:
        earlier = [u for u in neighbors(g, v) if pos[u] < pos[v]]
        if not bf_is_clique(g, earlier):
            return False
    return True


def bf_decomposable(g):
    """Try every vertex ordering; feasible for p <= 8."""
    return any(
        bf_is_perfect(g, order)
        for order in itertools.permutations(range(1, g.p + 1))
    )


# ------------------------------------------------------------ basic shape

def test_graph_edges_normalized():
    g = Graph(3, [(2, 1), (3, 2)])
    assert g.edges == frozenset({(1, 2), (2, 3)})
    assert g.has_edge(1, 2) and g.has_edge(2, 1)
    assert not g.has_edge(1, 3)


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 2)])
    with pytest.raises(ValueError):
        Graph(3, [(1, 4)])


def test_benchmark_graph_shapes(bench):
    assert bench["a"].p == 4 and len(bench["a"].edges) == 5
    assert bench["b"].p == 4 and len(bench["b"].edges) == 4
    assert bench["c"].p == 10 and len(bench["c"].edges) == 15
    assert bench["d"].p == 10 and len(bench["d"].edges) == 15


def test_benchmark_graph_b_is_four_cycle(graph_b):
    assert graph_b.edges == frozenset({(1, 2), (1, 3), (2, 4), (3, 4)})


# --------------------------------------------------------------- neighbors

def test_neighbors_examples(graph_a):
    assert neighbors(graph_a, 1) == frozenset({2, 3})
    assert neighbors(Graph(5, []), 3) == frozenset()
    assert neighbors(complete_graph(4), 2) == frozenset({1, 3, 4})


def test_neighbors_bounds(graph_a):
    with pytest.raises(ValueError):
        neighbors(graph_a, 0)
    with pytest.raises(ValueError):
        neighbors(graph_a, 5)


# ---------------------------------------------------------------- cliques

def test_is_clique_examples(bench):
    assert is_clique(bench["c"], {2, 3, 5, 6})
    assert not is_clique(bench["b"], {1, 4})
    for g in bench.values():
        for v in range(1, g.p + 1):
            assert is_clique(g, {v})
    # empty set is vacuously a clique
    assert is_clique(bench["a"], set())


def test_maximal_cliques_examples(bench):
    assert maximal_cliques(bench["a"]) == [(1, 2, 3), (2, 3, 4)]
    assert maximal_cliques(bench["c"]) == [
        (1, 2, 4),
        (2, 3, 5, 6),
        (4, 8, 9),
        (6, 7, 10),
    ]
    assert maximal_cliques(complete_graph(5)) == [(1, 2, 3, 4, 5)]
    assert maximal_cliques(Graph(3, [])) == [(1,), (2,), (3,)]


def test_maximal_cliques_match_bruteforce(bench):
    for g in bench.values():
        assert maximal_cliques(g) == bf_maximal_cliques(g)


def test_benchmark_clique_counts(bench):
    assert len(maximal_cliques(bench["a"])) == 2
    assert len(maximal_cliques(bench["b"])) == 4
    assert len(maximal_cliques(bench["c"])) == 4
    assert len(maximal_cliques(bench["d"])) == 9


def test_maximal_cliques_cover_all_edges(bench):
    for g in bench.values():
        covered = set()
        for c in maximal_cliques(g):
            covered.update(
                (min(u, v), max(u, v)) for u, v in itertools.combinations(c, 2)
            )
        assert covered == set(g.edges)
        nodes = set().union(*(set(c) for c in maximal_cliques(g)))
        assert nodes == set(range(1, g.p + 1))


# ------------------------------------------------------- induced subgraphs

def test_induced_subgraph_example(graph_c):
    sub, relabel = induced_subgraph(graph_c, [1, 2, 4, 5])
    assert relabel == {1: 1, 2: 2, 4: 3, 5: 4}
    assert sub.p == 4
    assert sub.edges == frozenset({(1, 2), (1, 3), (2, 3), (2, 4)})


def test_induced_subgraph_full_vertex_set(graph_a):
    sub, relabel = induced_subgraph(graph_a, range(1, 5))
    assert sub.edges == graph_a.edges
    assert relabel == {i: i for i in range(1, 5)}


def test_induced_subgraph_no_edges(graph_a):
    sub, _ = induced_subgraph(graph_a, [1, 4])
    assert sub.p == 2
    assert sub.edges == frozenset()


# ------------------------------------------------ orderings, decomposability

def test_perfect_ordering_examples(bench):
    order = perfect_ordering(bench["a"])
    assert order is not None
    assert sorted(order) == [1, 2, 3, 4]
    assert bf_is_perfect(bench["a"], order)

    assert perfect_ordering(bench["b"]) is None

    order = perfect_ordering(complete_graph(6))
    assert order is not None and bf_is_perfect(complete_graph(6), order)


def test_is_decomposable_examples(bench):
    assert is_decomposable(bench["a"])
    assert not is_decomposable(bench["b"])
    assert is_decomposable(bench["c"])
    assert not is_decomposable(bench["d"])
    assert is_decomposable(Graph(1, []))
    assert is_decomposable(Graph(5, []))


def test_decomposability_matches_bruteforce_small():
    # every graph on 4 vertices, plus 5-cycles and near-chordal cases
    verts4 = list(itertools.combinations(range(1, 5), 2))
    for bits in range(2 ** len(verts4)):
        edges = [e for k, e in enumerate(verts4) if bits >> k & 1]
        g = Graph(4, edges)
        assert is_decomposable(g) == bf_decomposable(g), edges
    five_cycle = Graph(5, [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
    assert not is_decomposable(five_cycle)
    assert is_decomposable(Graph(5, [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5), (1, 3), (1, 4)]))


def test_perfect_ordering_iff_decomposable(bench):
    for g in bench.values():
        order = perfect_ordering(g)
        if is_decomposable(g):
            assert order is not None and bf_is_perfect(g, order)
        else:
            assert order is None


# ------------------------------------------------------------ file parsing

def test_parse_graph_text():
    text = "4\n# comment line\n1 2\n3 4\n\n2 3\n"
    g = parse_graph_text(text)
    assert g.p == 4
    assert g.edges == frozenset({(1, 2), (2, 3), (3, 4)})


def test_parse_graph_text_errors():
    with pytest.raises(ValueError):
        parse_graph_text("")
    with pytest.raises(ValueError):
        parse_graph_text("3\n1 2 3\n")
    with pytest.raises(ValueError):
        parse_graph_text("3\n1 4\n")


def test_load_graph_file_roundtrip(tmp_path, graph_c):
    path = tmp_path / "g.txt"
    lines = [str(graph_c.p)] + [f"{i} {j}" for i, j in sorted(graph_c.edges)]
    path.write_text("\n".join(lines) + "\n")
    g = graphs.load_graph_file(path)
    assert g.p == graph_c.p and g.edges == graph_c.edges


# ------------------------------------------------------------- properties

def edge_sets(draw, p):
    pairs = list(itertools.combinations(range(1, p + 1), 2))
    return [e for e in pairs if draw(st.booleans())]


@st.composite
def random_graphs(draw, max_p=7):
    p = draw(st.integers(min_value=1, max_value=max_p))
    pairs = list(itertools.combinations(range(1, p + 1), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(p, [e for e, keep in zip(pairs, mask) if keep])


@given(random_graphs())
@settings(max_examples=60, deadline=None)
def test_property_maximal_cliques(g):
    cliques = maximal_cliques(g)
    assert cliques == sorted(cliques)
    seen_nodes = set()
    for c in cliques:
        assert bf_is_clique(g, c)
        # maximal: no vertex extends the clique
        for v in range(1, g.p + 1):
            if v not in c:
                assert not bf_is_clique(g, set(c) | {v})
        seen_nodes.update(c)
    assert seen_nodes == set(range(1, g.p + 1))


@given(random_graphs(max_p=6))
@settings(max_examples=40, deadline=None)
def test_property_perfect_ordering_definitional(g):
    order = perfect_ordering(g)
    assert is_decomposable(g) == (order is not None)
    if order is not None:
        assert sorted(order) == list(range(1, g.p + 1))
        assert bf_is_perfect(g, order)
    assert is_decomposable(g) == bf_decomposable(g)


@given(random_graphs())
@settings(max_examples=40, deadline=None)
def test_property_induced_full_is_identity(g):
    sub, relabel = induced_subgraph(g, range(1, g.p + 1))
    assert sub.p == g.p and sub.edges == g.edges
    assert relabel == {i: i for i in range(1, g.p + 1)}
