"""Undirected simple graphs and the structural analyses the privacy
guarantees depend on: incidence matrix, exact rank, connected components,
vertex cuts and vertex connectivity, and the honest/adversary edge split.

Node ids are arbitrary ints (protocol networks use 0..n-1; induced
subgraphs keep their original ids).  Rank is computed by exact integer
elimination and connectivity by exhaustive cut enumeration: both
quantities feed exact claims that must not be tolerance-dependent, and
the audit harness operates at desk scale.  The enumeration is
exponential; a max-flow based computation would be the replacement if
large graphs ever mattered.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

__all__ = [
    "Edge",
    "Network",
    "HonestSplit",
    "connected_components",
    "incidence_matrix",
    "incidence_rank",
    "is_vertex_cut",
    "connectivity",
    "honest_subgraph",
]

Edge = tuple[int, int]

_CONNECTIVITY_NODE_LIMIT = 20


def _normalize_edge(i: int, j: int) -> Edge:
    if i == j:
        raise ValueError(f"self-loop {{{i},{i}}} not allowed in a simple graph")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Network:
    """Simple undirected graph over an explicit, sorted node id tuple."""

    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]

    @classmethod
    def of(cls, n: int, edges: Iterable[Sequence[int]] = ()) -> "Network":
        """Network over agent ids 0..n-1."""
        if n < 1:
            raise ValueError("network needs at least one node")
        return cls.over(range(n), edges)

    @classmethod
    def over(cls, nodes: Iterable[int], edges: Iterable[Sequence[int]] = ()) -> "Network":
        node_tuple = tuple(sorted(nodes))
        if len(set(node_tuple)) != len(node_tuple):
            raise ValueError("duplicate node ids")
        node_set = set(node_tuple)
        seen: set[Edge] = set()
        for i, j in edges:
            e = _normalize_edge(i, j)
            if e[0] not in node_set or e[1] not in node_set:
                raise ValueError(f"edge {{{i},{j}}} references unknown node")
            if e in seen:
                raise ValueError(f"duplicate edge {{{e[0]},{e[1]}}}")
            seen.add(e)
        return cls(node_tuple, tuple(sorted(seen)))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Sorted neighbor ids of node i."""
        out = []
        for u, v in self.edges:
            if u == i:
                out.append(v)
            elif v == i:
                out.append(u)
        return tuple(sorted(out))

    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def is_connected(self) -> bool:
        return len(connected_components(self)) == 1


def connected_components(g: Network) -> list[tuple[int, ...]]:
    """Partition of the node set into maximal connected pieces.

    Returned as sorted tuples, ordered by smallest member; a singleton
    graph yields one component.
    """
    adj = g.adjacency()
    unvisited = set(g.nodes)
    parts: list[tuple[int, ...]] = []
    while unvisited:
        start = min(unvisited)
        stack = [start]
        comp = {start}
        unvisited.discard(start)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in unvisited:
                    unvisited.discard(w)
                    comp.add(w)
                    stack.append(w)
        parts.append(tuple(sorted(comp)))
    parts.sort(key=lambda c: c[0])
    return parts


def incidence_matrix(g: Network) -> list[list[int]]:
    """Node-edge incidence matrix over {-1, 0, +1}.

    Rows follow ``g.nodes`` order; columns follow the sorted edge order.
    The column of edge {i,j} with i<j carries +1 at row i and -1 at row
    j, so the all-ones row vector annihilates every column.
    """
    row_of = {v: r for r, v in enumerate(g.nodes)}
    mat = [[0] * len(g.edges) for _ in g.nodes]
    for c, (i, j) in enumerate(g.edges):
        mat[row_of[i]][c] = 1
        mat[row_of[j]][c] = -1
    return mat


def incidence_rank(g: Network) -> int:
    """Rank of the incidence matrix over the rationals, exactly.

    Fraction-based Gaussian elimination; equals n minus the number of
    connected components.
    """
    mat = [[Fraction(x) for x in row] for row in incidence_matrix(g)]
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    rank = 0
    pivot_row = 0
    for col in range(cols):
        pivot = next((r for r in range(pivot_row, rows) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        pr = mat[pivot_row]
        inv = 1 / pr[col]
        for r in range(pivot_row + 1, rows):
            factor = mat[r][col] * inv
            if factor:
                row = mat[r]
                for c in range(col, cols):
                    row[c] -= factor * pr[c]
        pivot_row += 1
        rank += 1
        if pivot_row == rows:
            break
    return rank


def _without(g: Network, removed: set[int]) -> Network:
    keep = [v for v in g.nodes if v not in removed]
    edges = [e for e in g.edges if e[0] not in removed and e[1] not in removed]
    return Network(tuple(keep), tuple(edges))


def is_vertex_cut(g: Network, cut: Iterable[int]) -> bool:
    """True iff removing ``cut`` (and incident edges) disconnects the rest.

    A single remaining vertex counts as connected.  ``cut`` must be a
    proper subset of the node set.
    """
    cut_set = set(cut)
    if not cut_set <= set(g.nodes):
        raise ValueError("cut contains unknown node ids")
    if cut_set == set(g.nodes):
        raise ValueError("cut must be a proper subset of the nodes")
    remainder = _without(g, cut_set)
    return len(connected_components(remainder)) >= 2


def connectivity(g: Network) -> int:
    """Size of the minimum vertex cut; 0 for an unconnected graph.

    Complete graphs have no vertex cut; by convention they return n-1.
    Exhaustive enumeration over candidate cuts, so restricted to small
    graphs (n <= 20).
    """
    if g.n < 2:
        raise ValueError("connectivity needs at least two nodes")
    if g.n > _CONNECTIVITY_NODE_LIMIT:
        raise ValueError(f"exhaustive connectivity limited to n <= {_CONNECTIVITY_NODE_LIMIT}")
    if not g.is_connected():
        return 0
    for size in range(1, g.n - 1):
        for cut in combinations(g.nodes, size):
            if is_vertex_cut(g, cut):
                return size
    return g.n - 1


@dataclass(frozen=True)
class HonestSplit:
    """The honest-only subgraph and the adversary-incident edge set."""

    honest: Network
    adversary_edges: tuple[Edge, ...]


def honest_subgraph(g: Network, adversaries: Iterable[int]) -> HonestSplit:
    """Split the edge set around an adversary set C.

    Returns the graph over the honest nodes with the edges entirely
    among honest agents, plus the complementary edges incident to C.
    """
    adv = set(adversaries)
    if not adv <= set(g.nodes):
        raise ValueError("adversary set contains unknown node ids")
    if adv == set(g.nodes):
        raise ValueError("adversary set must be a proper subset of the nodes")
    honest_nodes = tuple(v for v in g.nodes if v not in adv)
    honest_edges = tuple(e for e in g.edges if e[0] not in adv and e[1] not in adv)
    adversary_edges = tuple(e for e in g.edges if e[0] in adv or e[1] in adv)
    return HonestSplit(Network(honest_nodes, honest_edges), adversary_edges)
