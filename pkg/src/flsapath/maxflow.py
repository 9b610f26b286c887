"""Maximum flow with a distinguished source and sink.

Each undirected edge ``{u, v}`` is one residual arc pair carrying a single
antisymmetric flow value ``f_uv = -f_vu`` constrained to ``[-c_vu, c_uv]``.
Unbounded capacities use the :data:`UNBOUNDED` sentinel (``math.inf``), for
which residual arithmetic saturates.

The solver is Edmonds-Karp (BFS shortest augmenting paths). Besides the
flow it reports whether every source arc is saturated and which interior
nodes remain reachable from the source in the final residual graph.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

from .errors import InvalidArgument

UNBOUNDED = math.inf

#: Relative tolerance for the saturation test on source arcs.
TOL_FLOW = 1e-9


class FlowNetwork:
    """Flow problem on interior nodes ``0..n-1`` plus :attr:`source` and :attr:`sink`."""

    def __init__(self, n_interior: int):
        if n_interior < 0:
            raise InvalidArgument("interior node count must be non-negative")
        self.n_interior = n_interior
        self.source = n_interior
        self.sink = n_interior + 1
        self._head = []  # arc -> target node
        self._cap = []
        self._out = [[] for _ in range(n_interior + 2)]
        self.edges = []  # (u, v, c_uv, c_vu) in insertion order

    def add_edge(self, u: int, v: int, cap_uv: float, cap_vu: float = 0.0) -> None:
        nn = self.n_interior + 2
        if not (0 <= u < nn and 0 <= v < nn) or u == v:
            raise InvalidArgument(f"bad arc {(u, v)}")
        for c in (cap_uv, cap_vu):
            if math.isnan(c) or c < 0:
                raise InvalidArgument(f"capacity on {(u, v)} must be a non-negative number, got {c}")
        if self.source in (u, v):
            inward = cap_vu if u == self.source else cap_uv
            outward = cap_uv if u == self.source else cap_vu
            if inward != 0 or math.isinf(outward):
                raise InvalidArgument("source arcs need finite outward and zero inward capacity")
        if self.sink in (u, v):
            outward = cap_uv if u == self.sink else cap_vu
            if outward != 0:
                raise InvalidArgument("sink arcs must carry zero capacity out of the sink")
        a = len(self._head)
        self._head += [v, u]
        self._cap += [float(cap_uv), float(cap_vu)]
        self._out[u].append(a)
        self._out[v].append(a + 1)
        self.edges.append((u, v, float(cap_uv), float(cap_vu)))

    def source_capacity(self) -> float:
        return sum(c for u, v, c, _ in self.edges if u == self.source) + sum(
            c for u, v, _, c in self.edges if v == self.source
        )


@dataclass
class FlowResult:
    """Outcome of :func:`max_flow`.

    ``flows`` maps each edge as added, ``(u, v)``, to its net flow ``u -> v``.
    ``reachable`` holds the interior nodes reachable from the source through
    arcs with positive residual capacity; the source itself is implied.
    """

    value: float
    flows: dict
    saturated: bool
    reachable: frozenset


def max_flow(net: FlowNetwork) -> FlowResult:
    head, cap, out = net._head, net._cap, net._out
    src, snk = net.source, net.sink
    flow = [0.0] * len(head)
    finite = [c for c in cap if not math.isinf(c)]
    eps = 1e-13 * max(1.0, max(finite, default=1.0))

    value = 0.0
    nn = net.n_interior + 2
    while True:
        pred = [-1] * nn
        pred[src] = -2
        q = deque([src])
        while q and pred[snk] == -1:
            u = q.popleft()
            for a in out[u]:
                v = head[a]
                if pred[v] == -1 and cap[a] - flow[a] > eps:
                    pred[v] = a
                    q.append(v)
        if pred[snk] == -1:
            break
        push = math.inf
        v = snk
        while v != src:
            a = pred[v]
            push = min(push, cap[a] - flow[a])
            v = head[a ^ 1]
        if math.isinf(push):
            raise InvalidArgument("unbounded source-to-sink path")
        v = snk
        while v != src:
            a = pred[v]
            flow[a] += push
            flow[a ^ 1] -= push
            v = head[a ^ 1]
        value += push

    seen = [False] * nn
    seen[src] = True
    q = deque([src])
    while q:
        u = q.popleft()
        for a in out[u]:
            v = head[a]
            if not seen[v] and cap[a] - flow[a] > eps:
                seen[v] = True
                q.append(v)

    saturated = True
    for a in out[src]:
        c = cap[a]
        if c > 0 and c - flow[a] > TOL_FLOW * max(1.0, c):
            saturated = False
    flows = {(u, v): flow[2 * i] for i, (u, v, _, _) in enumerate(net.edges)}
    reachable = frozenset(k for k in range(net.n_interior) if seen[k])
    return FlowResult(value, flows, saturated, reachable)


def min_cut_value_bruteforce(net: FlowNetwork, max_nodes: int = 20) -> float:
    """Smallest source/sink cut capacity by enumerating every interior bipartition."""
    n = net.n_interior
    if n > max_nodes:
        raise InvalidArgument(f"brute-force min cut limited to {max_nodes} interior nodes, got {n}")
    best = math.inf
    for side in itertools.product((False, True), repeat=n):
        in_s = list(side) + [True, False]
        total = 0.0
        for u, v, c_uv, c_vu in net.edges:
            if in_s[u] and not in_s[v]:
                total += c_uv
            elif in_s[v] and not in_s[u]:
                total += c_vu
        best = min(best, total)
    return best
