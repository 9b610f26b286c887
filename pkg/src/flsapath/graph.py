"""Undirected penalty graphs over coefficient indices.

Nodes are 0-based. Each undirected edge is stored once as ``(k, l)`` with
``k < l``; its position in :attr:`PenaltyGraph.edges` is the edge id used by
the path solvers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ParseError


@dataclass(frozen=True)
class PenaltyGraph:
    """Immutable undirected graph defining which differences are penalized.

    Attributes
    ----------
    n : int
        Number of nodes.
    edges : np.ndarray, shape (m, 2)
        Edge endpoints, each row sorted so that ``edges[e, 0] < edges[e, 1]``.
    adjacency : tuple of tuple of (neighbor, edge_id)
        Incident edges per node.
    """

    n: int
    edges: np.ndarray
    adjacency: tuple = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, k):
        return [nb for nb, _ in self.adjacency[k]]

    def degree(self, k) -> int:
        return len(self.adjacency[k])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def edge_set(self):
        return {(int(k), int(l)) for k, l in self.edges}

    def components(self):
        """Label array assigning each node to a connected component."""
        label = np.full(self.n, -1, dtype=np.int64)
        c = 0
        for start in range(self.n):
            if label[start] >= 0:
                continue
            label[start] = c
            stack = [start]
            while stack:
                k = stack.pop()
                for nb, _ in self.adjacency[k]:
                    if label[nb] < 0:
                        label[nb] = c
                        stack.append(nb)
            c += 1
        return label


def _build(n, pairs) -> PenaltyGraph:
    edges = np.asarray(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    adj = [[] for _ in range(n)]
    for e, (k, l) in enumerate(edges.tolist()):
        adj[k].append((l, e))
        adj[l].append((k, e))
    edges.setflags(write=False)
    return PenaltyGraph(n, edges, tuple(tuple(a) for a in adj))


def chain_graph(n: int) -> PenaltyGraph:
    """Path graph 0 - 1 - ... - (n-1)."""
    if n < 1:
        raise InvalidArgument(f"chain needs at least one node, got n={n}")
    return _build(n, [(i, i + 1) for i in range(n - 1)])


def grid_graph(rows: int, cols: int) -> PenaltyGraph:
    """4-neighbour grid; node ``(r, c)`` has index ``r * cols + c``."""
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"grid dimensions must be positive, got {rows}x{cols}")
    pairs = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                pairs.append((k, k + 1))
            if r + 1 < rows:
                pairs.append((k, k + cols))
    return _build(rows * cols, pairs)


def from_edge_list(n: int, pairs) -> PenaltyGraph:
    """Graph from arbitrary ``(k, l)`` pairs; normalizes orientation and drops duplicates."""
    if n < 0:
        raise InvalidArgument(f"node count must be non-negative, got {n}")
    seen = set()
    for pair in pairs:
        k, l = (int(v) for v in pair)
        if not (0 <= k < n and 0 <= l < n):
            raise InvalidArgument(f"edge {(k, l)} has an endpoint outside [0, {n})")
        if k == l:
            raise InvalidArgument(f"self-loop {(k, l)} is not allowed")
        seen.add((min(k, l), max(k, l)))
    return _build(n, seen)


def read_edge_list(path) -> PenaltyGraph:
    """Parse the text format: header ``n m`` followed by ``m`` lines ``k l``."""
    with open(path) as fh:
        lines = [(i, ln.split()) for i, ln in enumerate(fh, 1)]
    lines = [(i, tok) for i, tok in lines if tok and not tok[0].startswith("#")]
    if not lines:
        raise ParseError(f"{path}: empty edge list file")
    lineno, head = lines[0]
    try:
        n, m = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError(f"{path}:{lineno}: expected header 'n m'") from None
    body = lines[1:]
    if len(body) != m:
        raise ParseError(f"{path}: header announces {m} edges, found {len(body)}")
    pairs = []
    for lineno, tok in body:
        try:
            pairs.append((int(tok[0]), int(tok[1])))
        except (ValueError, IndexError):
            raise ParseError(f"{path}:{lineno}: expected 'k l'") from None
    return from_edge_list(n, pairs)


def write_edge_list(graph: PenaltyGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {graph.m}\n")
        for k, l in graph.edges.tolist():
            fh.write(f"{k} {l}\n")
