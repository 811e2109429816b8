"""Undirected graphs: cliques, decomposability, perfect orderings, benchmark graphs.

Nodes are labeled 1..p in every public interface. A node ordering is a tuple
where position k (0-based) holds the node placed k-th.
"""

from __future__ import annotations

from typing import Iterable, Optional

__all__ = [
    "Graph",
    "complete_graph",
    "is_clique",
    "maximal_cliques",
    "induced_subgraph",
    "perfect_ordering",
    "is_decomposable",
    "benchmark_graphs",
    "parse_graph_text",
    "load_graph_file",
]


class Graph:
    """Immutable simple undirected graph on nodes 1..p."""

    __slots__ = ("p", "edges", "_adj")

    def __init__(self, p: int, edges: Iterable[tuple]) -> None:
        if int(p) != p or p < 1:
            raise ValueError("p must be a positive integer")
        p = int(p)
        canon = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            i, j = (a, b) if a < b else (b, a)
            if i < 1 or j > p:
                raise ValueError(f"edge ({a},{b}) outside 1..{p}")
            canon.add((int(i), int(j)))
        adj = [set() for _ in range(p + 1)]
        for i, j in canon:
            adj[i].add(j)
            adj[j].add(i)
        self.p = p
        self.edges = frozenset(canon)
        self._adj = tuple(frozenset(s) for s in adj)

    def neighbors(self, i: int) -> frozenset:
        """All nodes adjacent to node i."""
        self._check_node(i)
        return self._adj[i]

    def has_edge(self, i: int, j: int) -> bool:
        self._check_node(i)
        self._check_node(j)
        return (min(i, j), max(i, j)) in self.edges

    def _check_node(self, i) -> None:
        if int(i) != i or not 1 <= i <= self.p:
            raise ValueError(f"node {i} outside 1..{self.p}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.p == other.p and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.p, self.edges))

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, edges={sorted(self.edges)})"


def complete_graph(p: int) -> Graph:
    return Graph(p, [(i, j) for i in range(1, p + 1) for j in range(i + 1, p + 1)])


def neighbors(g: Graph, i: int) -> frozenset:
    return g.neighbors(i)


def is_clique(g: Graph, nodes: Iterable[int]) -> bool:
    """True iff every distinct pair in `nodes` is adjacent (empty set and singletons count)."""
    ns = sorted(set(nodes))
    for n in ns:
        g._check_node(n)
    for a_pos, a in enumerate(ns):
        adj = g.neighbors(a)
        for b in ns[a_pos + 1:]:
            if b not in adj:
                return False
    return True


def maximal_cliques(g: Graph) -> list:
    """All maximal cliques, sorted by smallest element then lexicographically.

    Bron-Kerbosch with greedy pivoting; the graphs handled here are small, so
    no degeneracy ordering is needed.
    """
    found = []

    def expand(r: frozenset, cand: frozenset, excl: frozenset) -> None:
        if not cand and not excl:
            found.append(tuple(sorted(r)))
            return
        pivot = max(cand | excl, key=lambda v: (len(g.neighbors(v) & cand), -v))
        for v in sorted(cand - g.neighbors(pivot)):
            expand(r | {v}, cand & g.neighbors(v), excl & g.neighbors(v))
            cand = cand - {v}
            excl = excl | {v}

    expand(frozenset(), frozenset(range(1, g.p + 1)), frozenset())
    return sorted(found)


def induced_subgraph(g: Graph, nodes: Iterable[int]):
    """Subgraph induced by `nodes`, relabeled 1..|nodes| order-preservingly.

    Returns (subgraph, relabel) where relabel maps original label -> new label.
    """
    ns = sorted(set(nodes))
    if not ns:
        raise ValueError("empty node set")
    for n in ns:
        g._check_node(n)
    keep = set(ns)
    relabel = {v: k + 1 for k, v in enumerate(ns)}
    sub_edges = [
        (relabel[i], relabel[j]) for (i, j) in g.edges if i in keep and j in keep
    ]
    return Graph(len(ns), sub_edges), relabel


def perfect_ordering(g: Graph) -> Optional[tuple]:
    """A node ordering whose lower-ordered neighbor sets are all cliques, or None.

    Maximum cardinality search with smallest-label tie-break, followed by the
    definitional check; for a graph admitting any perfect ordering, every MCS
    ordering is one, so a failed check proves none exists.
    """
    remaining = set(range(1, g.p + 1))
    count = dict.fromkeys(remaining, 0)
    order = []
    while remaining:
        v = min(remaining, key=lambda u: (-count[u], u))
        order.append(v)
        remaining.discard(v)
        for w in g.neighbors(v):
            if w in remaining:
                count[w] += 1
    pos = {v: k for k, v in enumerate(order)}
    for k, v in enumerate(order):
        earlier = [w for w in g.neighbors(v) if pos[w] < k]
        if not is_clique(g, earlier):
            return None
    return tuple(order)


def is_decomposable(g: Graph) -> bool:
    return perfect_ordering(g) is not None


def benchmark_graphs() -> dict:
    """The four named benchmark graphs "a".."d".

    (a) p=4 decomposable, (b) the 4-cycle, (c) p=10 decomposable,
    (d) p=10 non-decomposable.
    """
    return {
        "a": Graph(4, [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]),
        "b": Graph(4, [(1, 2), (1, 3), (2, 4), (3, 4)]),
        "c": Graph(10, [(1, 2), (1, 4), (2, 3), (2, 4), (2, 5), (2, 6), (3, 5),
                        (3, 6), (4, 8), (4, 9), (5, 6), (6, 7), (6, 10), (7, 10),
                        (8, 9)]),
        "d": Graph(10, [(1, 2), (1, 4), (2, 3), (2, 4), (3, 5), (3, 6), (3, 7),
                        (4, 8), (5, 6), (5, 9), (6, 7), (6, 10), (7, 10), (8, 9),
                        (9, 10)]),
    }


def parse_graph_text(text: str) -> Graph:
    """Parse the plain-text graph format.

    First meaningful line holds p; each further line holds one edge "i j"
    (1-based, whitespace-separated). '#' starts a comment; blank lines ignored.
    """
    p = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            values = [int(f) for f in fields]
        except ValueError:
            raise ValueError(f"line {lineno}: expected integers, got {line!r}") from None
        if p is None:
            if len(values) != 1:
                raise ValueError(f"line {lineno}: first line must hold the node count")
            p = values[0]
        else:
            if len(values) != 2:
                raise ValueError(f"line {lineno}: expected 'i j'")
            edges.append((values[0], values[1]))
    if p is None:
        raise ValueError("empty graph file")
    return Graph(p, edges)


def load_graph_file(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph_text(fh.read())
