"""Undirected, connected social graphs with dense integer agent ids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedGraph, GenerationFailed, InvalidEdge, OutOfRange

__all__ = ["Graph", "build_graph", "neighbors", "generate_er_graph", "is_connected"]


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph on agents ``0..n-1``.

    Edges are stored as sorted pairs ``(min, max)``. ``matrix`` is the
    boolean adjacency matrix, kept read-only so the graph can be shared
    across workers.
    """

    n: int
    edges: frozenset
    adjacency: tuple = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def neighbors(self, x: int) -> frozenset:
        return neighbors(self, x)

    def degree(self, x: int) -> int:
        return len(self.neighbors(x))

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def _normalize(n: int, edges: Iterable) -> frozenset:
    out = set()
    for e in edges:
        x, y = (int(v) for v in e)
        if x == y:
            raise InvalidEdge(f"self-loop on agent {x}")
        if not (0 <= x < n and 0 <= y < n):
            raise InvalidEdge(f"edge ({x}, {y}) references an id outside 0..{n - 1}")
        out.add((min(x, y), max(x, y)))
    return frozenset(out)


def _adjacency_matrix(n: int, edges: frozenset) -> np.ndarray:
    a = np.zeros((n, n), dtype=bool)
    if edges:
        idx = np.array(sorted(edges))
        a[idx[:, 0], idx[:, 1]] = True
        a[idx[:, 1], idx[:, 0]] = True
    a.setflags(write=False)
    return a


def is_connected(matrix: np.ndarray) -> bool:
    n = matrix.shape[0]
    if n <= 1:
        return True
    ncomp, _ = connected_components(csr_matrix(matrix), directed=False)
    return ncomp == 1


def build_graph(n: int, edges: Iterable) -> Graph:
    """Validate an edge list and return a connected :class:`Graph`.

    Duplicate edges (in either orientation) collapse silently.
    """
    if n < 1:
        raise InvalidEdge("a graph needs at least one agent")
    es = _normalize(n, edges)
    matrix = _adjacency_matrix(n, es)
    if not is_connected(matrix):
        raise DisconnectedGraph(f"graph on {n} agents has more than one component")
    adjacency = tuple(frozenset(np.flatnonzero(matrix[x]).tolist()) for x in range(n))
    return Graph(n=n, edges=es, adjacency=adjacency, matrix=matrix)


def neighbors(g: Graph, x: int) -> frozenset:
    if not 0 <= x < g.n:
        raise OutOfRange(f"agent {x} not in 0..{g.n - 1}")
    return g.adjacency[x]


def generate_er_graph(n: int, p: float, seed=None, max_attempts: int = 1000) -> Graph:
    """Erdős–Rényi G(n, p) conditioned on connectivity.

    Whole graphs are redrawn until one is connected, so the result follows
    the ER law restricted to connected graphs. The draw sequence depends
    only on ``seed``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        keep = rng.random(iu[0].size) < p
        edges = frozenset(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        matrix = _adjacency_matrix(n, edges)
        if is_connected(matrix):
            adjacency = tuple(frozenset(np.flatnonzero(matrix[x]).tolist()) for x in range(n))
            return Graph(n=n, edges=edges, adjacency=adjacency, matrix=matrix)
    raise GenerationFailed(f"no connected G({n}, {p}) draw in {max_attempts} attempts")
