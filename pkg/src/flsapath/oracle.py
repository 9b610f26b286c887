"""Independent reference solver for a single ``(lambda1, lambda2)``.

The ``lambda1 = 0`` problem is solved through its dual

    min_z  0.5 * ||y - D^T z||^2   subject to  |z_e| <= lambda2,

where ``D`` is the signed incidence matrix (row ``e = (k, l)`` has ``+1`` at
``k`` and ``-1`` at ``l``). The primal point is ``beta = y - D^T z``; the
result is then soft-thresholded for ``lambda1``.

Iteration is plain projected gradient with step ``1 / (2 * max_degree)``.
The duality gap ``sum_e lambda2 |d_e| - d_e z_e`` (with ``d = D beta``) is a
sum of non-negative terms, and since the primal is 1-strongly convex it
bounds the error: ``||beta - beta*||_2 <= sqrt(2 * gap)``. For large
``lambda2`` the gap of a converged iterate is dominated by rounding, so a gap
below its own rounding-error bound is also accepted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, InvalidArgument
from .graph import PenaltyGraph
from .maxflow import FlowNetwork, max_flow
from .path1d import soft_threshold

MAX_ITER = 10_000_000
#: The gap certificate must reach ``GAP_FACTOR * tol``. Rounding leaves a gap
#: of order 1e-15 at convergence, so ``sqrt(2 gap)`` cannot go far below 1e-7.
GAP_FACTOR = 100.0


@njit(cache=True)
def _primal(y, z, ek, el):
    beta = y.copy()
    for e in range(ek.size):
        beta[ek[e]] -= z[e]
        beta[el[e]] += z[e]
    return beta


@njit(cache=True)
def _objective(y, beta, ek, el, lam):
    obj = 0.5 * np.sum((y - beta) ** 2)
    for e in range(ek.size):
        obj += lam * abs(beta[ek[e]] - beta[el[e]])
    return obj


@njit(cache=True)
def _gap(y, beta, z, ek, el, lam):
    """Duality gap and a bound on its rounding error.

    ``beta_k`` is a sum of ``y_k`` and ``deg_k`` dual terms, so its rounding
    error is at most ``eps * deg_k * acc_k`` with ``acc_k = |y_k| + sum |z|``;
    each gap term ``|d| (lam - sign(d) z)`` inherits ``2 lam`` times the error
    of ``d``.
    """
    eps = np.finfo(np.float64).eps
    n = y.size
    acc = np.abs(y)
    deg = np.zeros(n)
    for e in range(ek.size):
        acc[ek[e]] += abs(z[e])
        acc[el[e]] += abs(z[e])
        deg[ek[e]] += 1.0
        deg[el[e]] += 1.0
    gap = 0.0
    floor = 0.0
    for e in range(ek.size):
        k, l = ek[e], el[e]
        d = beta[k] - beta[l]
        gap += lam * abs(d) - d * z[e]
        err_d = eps * ((deg[k] + 1.0) * acc[k] + (deg[l] + 1.0) * acc[l] + abs(d))
        floor += 4.0 * (2.0 * lam * err_d + eps * lam * abs(d))
    return gap, floor


@njit(cache=True)
def _dual_pg(y, ek, el, lam, step, tol, max_iter):
    m = ek.size
    z = np.zeros(m)
    beta = y.copy()
    prev_obj = np.empty(100)
    it = 0
    resid = np.inf
    gap = np.inf
    while it < max_iter:
        # z <- clip(z + step * D beta); track the projected step length.
        resid = 0.0
        for e in range(m):
            d = beta[ek[e]] - beta[el[e]]
            znew = min(lam, max(-lam, z[e] + step * d))
            r = abs(znew - z[e]) / step
            if r > resid:
                resid = r
            z[e] = znew
        beta = _primal(y, z, ek, el)
        obj = _objective(y, beta, ek, el, lam)
        slot = it % 100
        decrease = prev_obj[slot] - obj if it >= 100 else np.inf
        prev_obj[slot] = obj
        it += 1
        if resid < tol and decrease < tol:
            gap, floor = _gap(y, beta, z, ek, el, lam)
            if np.sqrt(2.0 * max(gap, 0.0)) <= GAP_FACTOR * tol or gap <= floor:
                return beta, it, resid, gap, True
    return beta, it, resid, gap, False


@dataclass
class OracleResult:
    beta: np.ndarray
    iterations: int
    residual: float  # max projected-gradient component at exit
    gap: float  # duality gap at exit; ||beta - beta*|| <= sqrt(2 gap)


def oracle_solve_full(y, graph: PenaltyGraph, lambda2: float, lambda1: float = 0.0, tol: float = 1e-8) -> OracleResult:
    """Like :func:`oracle_solve` but also returns iteration statistics."""
    y = np.asarray(y, dtype=float)
    if y.shape != (graph.n,):
        raise InvalidArgument(f"y has shape {y.shape}, graph has {graph.n} nodes")
    if not np.all(np.isfinite(y)):
        raise InvalidArgument("y contains non-finite values")
    if lambda2 < 0 or lambda1 < 0:
        raise InvalidArgument("penalties must be non-negative")
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    if graph.m == 0 or lambda2 == 0:
        return OracleResult(soft_threshold(y, lambda1), 0, 0.0, 0.0)
    ek = np.ascontiguousarray(graph.edges[:, 0])
    el = np.ascontiguousarray(graph.edges[:, 1])
    step = 1.0 / (2.0 * graph.max_degree())
    beta, it, resid, gap, ok = _dual_pg(y, ek, el, float(lambda2), step, float(tol), MAX_ITER)
    if not ok:
        raise ConvergenceError(f"oracle did not converge in {MAX_ITER} iterations", residual=resid)
    return OracleResult(soft_threshold(beta, lambda1), int(it), float(resid), float(gap))


def oracle_solve(y, graph: PenaltyGraph, lambda2: float, lambda1: float = 0.0, tol: float = 1e-8) -> np.ndarray:
    """FLSA solution at ``(lambda1, lambda2)``.

    Stops once the projected gradient and the objective decrease over 100
    iterations are below ``tol`` and the duality gap certifies
    ``||beta - beta*||_2 <= GAP_FACTOR * tol``, or is no larger than its
    rounding error.

    Raises
    ------
    ConvergenceError
        If the iteration cap is reached first; carries the last residual.
    """
    return oracle_solve_full(y, graph, lambda2, lambda1, tol).beta


@dataclass
class KKTReport:
    """Optimality residuals of a candidate ``beta`` (``lambda1 = 0``)."""

    infeasibility: float  # worst plateau imbalance or unmet flow
    plateaus: int

    def ok(self, tol: float) -> bool:
        return self.infeasibility <= tol


def check_kkt(y, graph: PenaltyGraph, beta, lambda2: float, eq_tol: float = 1e-9) -> KKTReport:
    """Check the subgradient conditions ``beta_k - y_k + sum_l tau_kl = 0``.

    On edges whose endpoints differ by more than ``eq_tol`` the subgradient is
    fixed at ``lambda2 * sign``. Each plateau (component of the remaining
    edges) must then route the supplies ``b_k = y_k - beta_k - sum fixed tau``
    through its internal edges with capacity ``lambda2`` each way; this is a
    max-flow feasibility problem.
    """
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    ek, el = graph.edges[:, 0], graph.edges[:, 1]
    diff = beta[ek] - beta[el]
    fixed = np.abs(diff) > eq_tol
    b = y - beta
    t = np.sign(diff[fixed]) * lambda2
    np.add.at(b, ek[fixed], -t)
    np.add.at(b, el[fixed], t)

    # plateaus = components over the free edges
    parent = np.arange(graph.n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k, l in graph.edges[~fixed].tolist():
        ra, rb = find(k), find(l)
        if ra != rb:
            parent[ra] = rb
    roots = np.array([find(k) for k in range(graph.n)])
    worst = 0.0
    labels, inverse = np.unique(roots, return_inverse=True)
    free_edges = graph.edges[~fixed]
    by_label = [[] for _ in labels]
    for k, l in free_edges.tolist():
        by_label[inverse[k]].append((k, l))
    for c in range(len(labels)):
        nodes = np.flatnonzero(inverse == c)
        bc = b[nodes]
        worst = max(worst, abs(float(bc.sum())))
        if len(nodes) == 1:
            continue
        loc = {int(k): i for i, k in enumerate(nodes)}
        net = FlowNetwork(len(nodes))
        for k, l in by_label[c]:
            net.add_edge(loc[k], loc[l], lambda2, lambda2)
        for i, v in enumerate(bc.tolist()):
            if v > 0:
                net.add_edge(net.source, i, v)
            elif v < 0:
                net.add_edge(i, net.sink, -v)
        supply = max(float(bc[bc > 0].sum()), float(-bc[bc < 0].sum()))
        worst = max(worst, supply - max_flow(net).value)
    return KKTReport(worst, len(labels))
