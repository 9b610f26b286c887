"""Solution path of the fused lasso signal approximator on an arbitrary graph.

Coefficients are grouped into fused sets; each set moves linearly in
``lambda2`` with a slope fixed by the signs of its boundary edges. Within a
set, the scaled subgradients ``tau_kl`` also move linearly, with rates read
off a maximum flow whose source and sink capacities are the node pushes. The
path has two kinds of breakpoints:

* a *hitting* event, when two adjacent sets meet and fuse;
* a *violation* event, when some ``|tau_kl|`` reaches ``lambda2``. The flow is
  recomputed with that edge capped; if it no longer saturates the source, the
  set splits into the residual-reachable part ``R`` and the rest ``S``.

As in the 1-D solver, the order between two adjacent sets is structural:
taken from ``y`` at ``lambda2 = 0`` or from the orientation of a split
(``R`` above ``S``), never re-derived from floating point comparisons.

With a finite cap ``K`` sets of size ``>= K`` are frozen: they are never
checked for splits, which gives the approximate variant of the algorithm.
"""
from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvariantError
from .graph import PenaltyGraph
from .maxflow import UNBOUNDED, FlowNetwork, max_flow
from .path1d import hitting_time_1d, soft_threshold

#: Events whose values differ by at most this much form one breakpoint.
TOL_EV = 1e-12
#: Pushes smaller than this in magnitude get no source or sink arc.
TOL_PUSH = 1e-12

_FUSE, _VIOLATION = 0, 1


def tol_tau(lambda2: float) -> float:
    """Distance from ``+-lambda2`` within which ``tau`` counts as at the bound."""
    return 1e-9 * max(1.0, lambda2)


# ---------------------------------------------------------------------------
# Building blocks, usable on their own


def slope_general(beta, size: int, neighbor_betas) -> float:
    """Slope of a fused set from the values across its boundary edges.

    ``neighbor_betas`` has one entry per boundary edge (a neighbouring set
    joined by several edges appears several times).
    """
    nb = np.asarray(neighbor_betas, dtype=float)
    if np.any(nb == beta):
        raise InvariantError("neighbouring set has the same value; a fusion was missed")
    return -float(np.sign(beta - nb).sum()) / size


def compute_pushes(ext_t, slope: float) -> np.ndarray:
    """Pushes ``p_k = -sum(external t_kl) - slope`` for each member.

    ``ext_t[k]`` is the sum of the boundary signs ``t_kl`` at member ``k``.
    The pushes of a set sum to zero.
    """
    return -np.asarray(ext_t, dtype=float) - slope


def build_flow_graph(tau, pushes, lambda2: float, local_edges) -> FlowNetwork:
    """Flow network of one set.

    Parameters
    ----------
    tau : array, shape (q,)
        Current ``tau_kl`` on the internal edges, oriented as ``local_edges``.
    pushes : array, shape (s,)
        Push of each member (local index).
    local_edges : array, shape (q, 2)
        Internal edges as pairs of local indices.
    """
    tau = np.asarray(tau, dtype=float)
    tol = tol_tau(lambda2)
    if np.any(np.abs(tau) > lambda2 + tol):
        raise InvariantError(f"tau outside [-{lambda2}, {lambda2}] beyond tolerance")
    net = FlowNetwork(len(pushes))
    for (k, l), t in zip(np.asarray(local_edges, dtype=np.int64).reshape(-1, 2).tolist(), tau.tolist()):
        c_kl = 1.0 if t >= lambda2 - tol else UNBOUNDED
        c_lk = 1.0 if t <= -lambda2 + tol else UNBOUNDED
        net.add_edge(k, l, c_kl, c_lk)
    for k, p in enumerate(np.asarray(pushes, dtype=float).tolist()):
        if p > TOL_PUSH:
            net.add_edge(net.source, k, p)
        elif p < -TOL_PUSH:
            net.add_edge(k, net.sink, -p)
    return net


@dataclass
class Certified:
    """Saturated flow: ``rates[i]`` is ``d tau / d lambda2`` on local edge ``i``."""

    rates: np.ndarray


@dataclass
class Split:
    """Unsaturated flow: local members reachable from the source (``R``) and the rest (``S``)."""

    R: np.ndarray
    S: np.ndarray


def certify_or_split(tau, pushes, lambda2: float, local_edges):
    net = build_flow_graph(tau, pushes, lambda2, local_edges)
    res = max_flow(net)
    if res.saturated:
        edges = np.asarray(local_edges, dtype=np.int64).reshape(-1, 2)
        rates = np.array([res.flows[(int(k), int(l))] for k, l in edges], dtype=float)
        return Certified(rates)
    R = np.array(sorted(res.reachable), dtype=np.int64)
    S = np.setdiff1d(np.arange(len(pushes)), R)
    if R.size == 0 or S.size == 0:
        raise InvariantError("unsaturated flow without a proper split")
    return Split(R, S)


def hitting_time_general(beta_i, slope_i, beta_j, slope_j, lambda_now):
    """Meeting value of two adjacent sets, or ``None`` (same rule as in 1-D)."""
    return hitting_time_1d(beta_i, slope_i, beta_j, slope_j, lambda_now)


def violation_time(tau, rates, lambda_now: float):
    """First value at which some ``|tau_kl|`` would exceed ``lambda2``.

    Returns ``(value, edge_index)``, or ``(None, None)`` when every rate lies
    in ``[-1, 1]``.
    """
    tau = np.asarray(tau, dtype=float)
    rates = np.asarray(rates, dtype=float)
    fast = np.abs(rates) > 1.0 + 1e-9
    if not np.any(fast):
        return None, None
    gap = np.abs(np.sign(rates[fast]) * lambda_now - tau[fast])
    v = gap / (np.abs(rates[fast]) - 1.0) + lambda_now
    i = int(np.argmin(v))
    return float(v[i]), int(np.flatnonzero(fast)[i])


def _pair_hit(order, b_left, s_left, b_right, s_right, lam_now):
    """Meeting value given the fixed order ``sign(left - right)``; ``None`` if never."""
    closing = order * (s_right - s_left)
    if closing <= 0:
        return None
    gap = order * (b_left - b_right)
    if gap <= 0:
        return lam_now
    # a positive gap closes strictly later, even when the quotient underflows
    return max(lam_now + gap / closing, math.nextafter(lam_now, math.inf))


# ---------------------------------------------------------------------------
# Path storage


@dataclass
class GeneralPathStore:
    """Per-node piecewise linear trajectories plus the event log.

    Node ``k`` owns anchors ``ptr[k]:ptr[k+1]`` of ``lam``, ``beta`` and
    ``slope``; between consecutive anchors ``beta_k`` is affine.
    """

    y: np.ndarray
    graph: PenaltyGraph
    cap: float
    ptr: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    slope: np.ndarray
    events: list  # (lambda, kind, set_a, set_b)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.y)

    def fusion_values(self) -> np.ndarray:
        return np.array([e[0] for e in self.events if e[1] == "fuse"])

    @property
    def n_fusions(self) -> int:
        return sum(1 for e in self.events if e[1] == "fuse")

    @property
    def n_splits(self) -> int:
        return len({(e[0], e[2]) for e in self.events if e[1] == "split"})

    def breakpoints(self) -> np.ndarray:
        """Distinct event values, including 0."""
        return np.unique(np.concatenate(([0.0], [e[0] for e in self.events])))

    def anchors(self, k):
        s = slice(self.ptr[k], self.ptr[k + 1])
        return self.lam[s], self.beta[s], self.slope[s]


def eval_general(store: GeneralPathStore, lambda2) -> np.ndarray:
    """Solution at ``lambda2`` with ``lambda1 = 0``; a sequence gives one row per value."""
    lams = np.asarray(lambda2, dtype=float)
    if np.any(lams < 0) or not np.all(np.isfinite(lams)):
        raise InvalidArgument("lambda2 must be finite and non-negative")
    if lams.ndim > 0:
        return np.vstack([eval_general(store, float(v)) for v in lams])
    lam = float(lams)
    # Anchor count at or below lam per node; every node has one at 0.
    cnt = np.add.reduceat((store.lam <= lam).astype(np.int64), store.ptr[:-1])
    idx = store.ptr[:-1] + cnt - 1
    return store.beta[idx] + store.slope[idx] * (lam - store.lam[idx])


def eval_general_with_l1(store: GeneralPathStore, lambda2, lambda1: float) -> np.ndarray:
    if lambda1 < 0:
        raise InvalidArgument(f"lambda1 must be non-negative, got {lambda1}")
    return soft_threshold(eval_general(store, lambda2), lambda1)


def continuity_error(store: GeneralPathStore) -> float:
    """Largest jump between consecutive anchors of any node.

    Each anchor's segment, extended to the next anchor's value, must land on
    that anchor's ``beta``.
    """
    lam, beta, slope, ptr = store.lam, store.beta, store.slope, store.ptr
    nxt = np.ones(len(lam), dtype=bool)
    nxt[ptr[1:] - 1] = False  # last anchor of each node has no successor
    i = np.flatnonzero(nxt)
    if i.size == 0:
        return 0.0
    pred = beta[i] + slope[i] * (lam[i + 1] - lam[i])
    return float(np.max(np.abs(pred - beta[i + 1])))


def anchors_increasing(store: GeneralPathStore) -> bool:
    """Per node, anchors have strictly increasing ``lambda2``."""
    lam, ptr = store.lam, store.ptr
    step = np.diff(lam)
    inside = np.ones(len(step), dtype=bool)
    inside[ptr[1:-1] - 1] = False
    return bool(np.all(step[inside] > 0))


def write_anchors(store: GeneralPathStore, fh) -> None:
    """Per-node anchors as CSV ``node,lambda,beta,slope``."""
    fh.write("node,lambda,beta,slope\n")
    for k in range(store.n):
        for i in range(store.ptr[k], store.ptr[k + 1]):
            fh.write(f"{k},{store.lam[i]:.17g},{store.beta[i]:.17g},{store.slope[i]:.17g}\n")


def store_from_anchors(y, graph: PenaltyGraph, rows, events=()) -> GeneralPathStore:
    """Rebuild a store from ``(node, lambda, beta, slope)`` rows, e.g. read back from CSV."""
    rows = sorted((int(k), float(l), float(b), float(s)) for k, l, b, s in rows)
    n = graph.n
    counts = np.bincount([r[0] for r in rows], minlength=n)
    if len(counts) != n or np.any(counts == 0):
        raise InvalidArgument("every node needs at least one anchor")
    arr = np.array([r[1:] for r in rows], dtype=float)
    return GeneralPathStore(
        y=np.asarray(y, dtype=float),
        graph=graph,
        cap=math.inf,
        ptr=np.concatenate(([0], np.cumsum(counts))),
        lam=arr[:, 0].copy(),
        beta=arr[:, 1].copy(),
        slope=arr[:, 2].copy(),
        events=list(events),
    )


def write_event_log(store: GeneralPathStore, fh) -> None:
    fh.write("lambda,kind,set_a,set_b\n")
    for lam, kind, a, b in store.events:
        fh.write(f"{lam:.17g},{kind},{a},{b}\n")


# ---------------------------------------------------------------------------
# Event engine


class _Engine:
    def __init__(self, y, graph: PenaltyGraph, cap):
        self.y = y
        self.g = graph
        self.n = graph.n
        self.cap = math.inf if cap is None else cap
        self.edges = graph.edges
        m = graph.m
        # Structural order across boundary edges: sign(beta_k - beta_l), k < l.
        self.esign = np.sign(y[self.edges[:, 0]] - y[self.edges[:, 1]]) if m else np.zeros(0)
        self.tau_lam = np.zeros(m)
        self.tau_val = np.zeros(m)
        self.tau_rate = np.zeros(m)
        self.set_of = np.full(self.n, -1, dtype=np.int64)
        # per-set records, indexed by set id
        self.members = []
        self.lam_ref = []
        self.beta_ref = []
        self.slope = []
        self.alive = []
        self.frozen = []
        self.tau_ver = []
        self.heap = []
        self.events = []
        self.cert_queue = set()
        self.recert = set()
        # per-node anchors
        self.a_lam = [[] for _ in range(self.n)]
        self.a_beta = [[] for _ in range(self.n)]
        self.a_slope = [[] for _ in range(self.n)]
        self.diag = {"max_tau_excess": 0.0, "max_fuse_gap": 0.0, "max_push_sum": 0.0, "certifications": 0}
        self.cut_edges = set()  # edges cut by splits at the current breakpoint
        self.lam_now = 0.0

    # -- helpers ----------------------------------------------------------
    def beta_at(self, sid, lam):
        return self.beta_ref[sid] + self.slope[sid] * (lam - self.lam_ref[sid])

    def _t(self, e, node):
        """Boundary sign of edge ``e`` seen from endpoint ``node``."""
        s = self.esign[e]
        return s if node == self.edges[e, 0] else -s

    def _boundary(self, sid):
        set_of = self.set_of
        for k in self.members[sid]:
            for nb, e in self.g.adjacency[k]:
                if set_of[nb] != sid:
                    yield k, nb, e

    def _internal_edges(self, members, sid):
        set_of = self.set_of
        out = []
        for k in members:
            for nb, e in self.g.adjacency[k]:
                if set_of[nb] == sid and k < nb:
                    out.append(e)
        out.sort()
        return out

    def _tau_now(self, es, lam):
        es = np.asarray(es, dtype=np.int64)
        return self.tau_val[es] + self.tau_rate[es] * (lam - self.tau_lam[es])

    # -- set lifecycle ----------------------------------------------------
    def new_set(self, members, lam, beta, schedule=True):
        sid = len(self.members)
        members = sorted(members)
        self.members.append(members)
        self.set_of[members] = sid
        size = len(members)
        ext = sum(self._t(e, k) for k, _, e in self._boundary(sid))
        slope = -ext / size
        self.lam_ref.append(lam)
        self.beta_ref.append(beta)
        self.slope.append(slope)
        self.alive.append(True)
        self.frozen.append(size >= self.cap)
        self.tau_ver.append(0)
        for k in members:
            if self.a_lam[k] and self.a_lam[k][-1] == lam:
                self.a_beta[k][-1], self.a_slope[k][-1] = beta, slope
            else:
                self.a_lam[k].append(lam)
                self.a_beta[k].append(beta)
                self.a_slope[k].append(slope)
        if schedule:
            self.schedule(sid)
        if size > 1 and not self.frozen[sid]:
            self.cert_queue.add(sid)
        return sid

    def schedule(self, sid):
        """Queue hitting events between ``sid`` and each neighbouring set."""
        lam, beta, slope = self.lam_ref[sid], self.beta_ref[sid], self.slope[sid]
        by_nb = defaultdict(list)
        for k, nb, e in self._boundary(sid):
            by_nb[int(self.set_of[nb])].append(self._t(e, k))
        for other, ts in sorted(by_nb.items()):
            if min(ts) != max(ts) or ts[0] == 0:
                # Equal in the data, or touching from both sides: same value now.
                h = lam
            else:
                h = _pair_hit(ts[0], beta, slope, self.beta_at(other, lam), self.slope[other], lam)
            if h is not None:
                a, b = min(sid, other), max(sid, other)
                heapq.heappush(self.heap, (h, _FUSE, a, b))

    def kill(self, sid):
        self.alive[sid] = False

    def fuse(self, a, b, lam):
        ba, bb = self.beta_at(a, lam), self.beta_at(b, lam)
        self.diag["max_fuse_gap"] = max(self.diag["max_fuse_gap"], abs(ba - bb))
        ma, mb = self.members[a], self.members[b]
        beta = ba if ba == bb else (len(ma) * ba + len(mb) * bb) / (len(ma) + len(mb))
        keep = []
        for sid in (a, b):
            if not self.frozen[sid] and len(self.members[sid]) > 1:
                keep += self._internal_edges(self.members[sid], sid)
        bridge = []
        for k in ma:
            for nb, e in self.g.adjacency[k]:
                if self.set_of[nb] == b:
                    bridge.append(e)
                    if e in self.cut_edges:
                        raise InvariantError(f"sets split at lambda2={lam} fuse again at the same value")
        if keep:
            tau = self._tau_now(keep, lam)
            self._note_tau(tau, lam)
            self.tau_val[keep] = np.clip(tau, -lam, lam)
            self.tau_lam[keep] = lam
            self.tau_rate[keep] = 0.0
        bridge = np.asarray(bridge, dtype=np.int64)
        self.tau_val[bridge] = lam * self.esign[bridge]
        self.tau_lam[bridge] = lam
        self.tau_rate[bridge] = 0.0
        self.kill(a)
        self.kill(b)
        c = self.new_set(ma + mb, lam, beta)
        self.events.append((lam, "fuse", a, b))
        return c

    def _note_tau(self, tau, lam):
        if len(tau):
            ex = float(np.max(np.abs(tau))) - lam
            self.diag["max_tau_excess"] = max(self.diag["max_tau_excess"], ex)

    def certify(self, sid, lam):
        members = self.members[sid]
        es = self._internal_edges(members, sid)
        loc = {k: i for i, k in enumerate(members)}
        local_edges = np.array([[loc[int(k)], loc[int(l)]] for k, l in self.edges[es]], dtype=np.int64).reshape(-1, 2)
        tau = self._tau_now(es, lam)
        self._note_tau(tau, lam)
        tau = np.clip(tau, -lam, lam)
        ext = np.zeros(len(members))
        for k, nb, e in self._boundary(sid):
            ext[loc[k]] += self._t(e, k)
        pushes = compute_pushes(ext, self.slope[sid])
        self.diag["max_push_sum"] = max(self.diag["max_push_sum"], abs(float(pushes.sum())))
        self.diag["certifications"] += 1
        out = certify_or_split(tau, pushes, lam, local_edges)
        es = np.asarray(es, dtype=np.int64)
        if isinstance(out, Certified):
            self.tau_val[es] = tau
            self.tau_lam[es] = lam
            self.tau_rate[es] = out.rates
            self.tau_ver[sid] += 1
            v, _ = violation_time(tau, out.rates, lam)
            if v is not None:
                heapq.heappush(self.heap, (v, _VIOLATION, sid, self.tau_ver[sid]))
            return None
        # Split: R moves up relative to S across every cut edge.
        in_r = np.zeros(len(members), dtype=bool)
        in_r[out.R] = True
        beta = self.beta_at(sid, lam)
        self.tau_val[es] = tau
        self.tau_lam[es] = lam
        self.tau_rate[es] = 0.0
        side = {k: bool(in_r[loc[k]]) for k in members}
        for e, (k, l) in zip(es.tolist(), self.edges[es].tolist()):
            if side[k] != side[l]:
                self.esign[e] = 1.0 if side[k] else -1.0
                self.cut_edges.add(e)
        self.kill(sid)
        pieces = self._components([k for k in members if side[k]]) + self._components(
            [k for k in members if not side[k]]
        )
        for piece in pieces:
            new = self.new_set(piece, lam, beta)
            self.events.append((lam, "split", sid, new))
        return pieces

    def _components(self, nodes):
        inside = set(nodes)
        seen = set()
        comps = []
        for s in nodes:
            if s in seen:
                continue
            seen.add(s)
            comp, stack = [], [s]
            while stack:
                k = stack.pop()
                comp.append(k)
                for nb, _ in self.g.adjacency[k]:
                    if nb in inside and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            comps.append(sorted(comp))
        return comps

    # -- main loop --------------------------------------------------------
    def run(self):
        for k in range(self.n):
            self.new_set([k], 0.0, float(self.y[k]), schedule=False)
        for k in range(self.n):
            self.schedule(k)
        self.cert_queue.clear()  # singletons need no certificate
        while self.heap or self.cert_queue:
            lam0 = self.heap[0][0] if self.heap else self.lam_now
            if self.cert_queue:
                lam0 = self.lam_now
            if lam0 < self.lam_now - TOL_EV:
                raise InvariantError(f"event at {lam0} precedes current value {self.lam_now}")
            lam0 = max(lam0, self.lam_now)
            self.lam_now = lam0
            self.cut_edges.clear()
            self._breakpoint(lam0)

    def _breakpoint(self, lam0):
        steps = 0
        limit = 4 * self.n
        while True:
            batch = []
            while self.heap and self.heap[0][0] <= lam0 + TOL_EV:
                batch.append(heapq.heappop(self.heap))
            batch.sort(key=lambda ev: (ev[1], ev[2], ev[3]))
            fused = False
            for ev in batch:
                if ev[1] == _FUSE:
                    a, b = ev[2], ev[3]
                    if self.alive[a] and self.alive[b]:
                        self.fuse(a, b, lam0)
                        fused = True
                        steps += 1
                else:
                    sid, ver = ev[2], ev[3]
                    if self.alive[sid] and self.tau_ver[sid] == ver:
                        self.cert_queue.add(sid)
                        self.recert.add(sid)
            if steps > limit:
                raise InvariantError(f"no fixed point after {steps} steps at lambda2={lam0}")
            if fused:
                continue
            queue = sorted(s for s in self.cert_queue if self.alive[s])
            self.cert_queue.clear()
            if not queue:
                if not (self.heap and self.heap[0][0] <= lam0 + TOL_EV):
                    return
                continue
            for sid in queue:
                if not self.alive[sid]:
                    continue
                if sid in self.recert:
                    self.recert.discard(sid)
                    self.events.append((lam0, "recert", sid, -1))
                if self.certify(sid, lam0) is not None:
                    steps += 1

    def store(self) -> GeneralPathStore:
        counts = np.array([len(a) for a in self.a_lam], dtype=np.int64)
        ptr = np.concatenate(([0], np.cumsum(counts)))
        flat = lambda rows: np.array([v for r in rows for v in r], dtype=float)
        return GeneralPathStore(
            y=self.y.copy(),
            graph=self.g,
            cap=self.cap,
            ptr=ptr,
            lam=flat(self.a_lam),
            beta=flat(self.a_beta),
            slope=flat(self.a_slope),
            events=[(float(l), k, int(a), int(b)) for l, k, a, b in self.events],
            diagnostics={k: float(v) for k, v in self.diag.items()},
        )


def solve_path_general(y, graph: PenaltyGraph, cap=None) -> GeneralPathStore:
    """Full ``lambda2`` path for ``lambda1 = 0`` on ``graph``.

    Parameters
    ----------
    y : array, shape (n,)
        Observations, one per graph node.
    graph : PenaltyGraph
    cap : int, optional
        Sets of at least this size are never split (approximate mode).
        ``None`` gives the exact path.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != graph.n:
        raise InvalidArgument(f"y has shape {y.shape}, graph has {graph.n} nodes")
    if y.size == 0:
        raise InvalidArgument("y must be non-empty")
    if not np.all(np.isfinite(y)):
        raise InvalidArgument("y contains non-finite values")
    if cap is not None and not cap >= 1:
        raise InvalidArgument(f"cap must be at least 1, got {cap}")
    eng = _Engine(y, graph, cap)
    eng.run()
    return eng.store()
