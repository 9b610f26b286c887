"""Exact solution path of the one-dimensional fused lasso signal approximator.

With ``lambda1 = 0`` the solution is piecewise linear in ``lambda2`` and
adjacent blocks only ever merge, so the path is a sequence of ``n - 1``
fusions. Each live block carries an anchor ``(lambda_ref, beta_ref, slope)``;
the next fusion is the minimum of a tournament tree over the pairwise hitting
times of adjacent blocks, giving O(n log n) overall.

The path is recorded as a binary fusion tree: leaves ``0..n-1`` are the
coefficients, internal node ``n + j`` is the block created by the ``j``-th
fusion. Because fusions are processed in non-decreasing ``lambda2`` order,
internal node ids are sorted by creation value.

Adjacent blocks keep the order they had at ``lambda2 = 0`` until they
fuse, so the sign of each block boundary is read once from ``y`` instead of
being recomputed from floating point values. Ties then resolve exactly: two
touching blocks whose slopes converge fuse at the current value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgument, InvariantError


@dataclass(frozen=True)
class PathTree:
    """Binary fusion tree. Arrays are indexed by node id (``2n - 1`` nodes)."""

    y: np.ndarray
    lam: np.ndarray  # value at which the node's block was created
    beta: np.ndarray  # block value at creation
    slope: np.ndarray  # d beta / d lambda2 while the block is live
    left: np.ndarray  # children, -1 for leaves
    right: np.ndarray
    parent: np.ndarray  # -1 for the root
    lo: np.ndarray  # index range covered by the node
    hi: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def root(self) -> int:
        return len(self.lam) - 1

    @property
    def breakpoints(self) -> np.ndarray:
        """Fusion values, one per internal node, non-decreasing."""
        return self.lam[self.n :]


def hitting_time_1d(beta_i, slope_i, beta_j, slope_j, lambda_now):
    """Value at which two adjacent block trajectories meet, or ``None``.

    ``None`` is returned for parallel trajectories and for meeting values not
    strictly beyond ``lambda_now`` (blocks moving apart).
    """
    if slope_i == slope_j:
        return None
    h = (beta_i - beta_j) / (slope_j - slope_i) + lambda_now
    return h if h > lambda_now else None


def soft_threshold(beta, lambda1):
    """Elementwise ``sign(v) * max(|v| - lambda1, 0)``."""
    if lambda1 < 0:
        raise InvalidArgument(f"lambda1 must be non-negative, got {lambda1}")
    beta = np.asarray(beta, dtype=float)
    return np.sign(beta) * np.maximum(np.abs(beta) - lambda1, 0.0)


def _check_signal(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise InvalidArgument("y must be a non-empty 1-D vector")
    if not np.all(np.isfinite(y)):
        raise InvalidArgument("y contains non-finite values")
    return y


def solve_path_1d(y) -> PathTree:
    """Full ``lambda2`` path for ``lambda1 = 0`` on the chain graph."""
    y = _check_signal(y)
    n = y.size
    if n >= 2**31:
        raise InvalidArgument("signals longer than 2**31 - 1 are not supported")
    # d[i] = sign(y[i] - y[i+1]) is the fixed order across boundary i | i+1.
    d = np.sign(y[:-1] - y[1:]).astype(np.int8)
    leaf_slope, t_lam, t_beta, t_slope, t_left, t_right, t_lo, t_hi, made = _fuse_all(y, d)
    if made != n - 1:
        raise InvariantError(f"path stopped after {made} of {n - 1} fusions")
    none = np.full(n, -1, dtype=np.int64)
    left = np.concatenate((none, t_left))
    right = np.concatenate((none, t_right))
    parent = np.full(2 * n - 1, -1, dtype=np.int64)
    inner = np.arange(n, 2 * n - 1)
    parent[t_left] = inner
    parent[t_right] = inner
    leaves = np.arange(n, dtype=np.int64)
    return PathTree(
        y=y.copy(),
        lam=np.concatenate((np.zeros(n), t_lam)),
        beta=np.concatenate((y, t_beta)),
        slope=np.concatenate((leaf_slope, t_slope)),
        left=left,
        right=right,
        parent=parent,
        lo=np.concatenate((leaves, t_lo)),
        hi=np.concatenate((leaves, t_hi)),
    )


# Candidate fusions live in a tournament tree over block boundaries
# (boundary p separates index p from p + 1). Leaf ``S + p`` holds the row
# (hitting value, p), with value inf when the blocks separate, and each
# internal node the lexicographically smallest row below it, so the root is
# the next fusion. A fusion only re-keys the popped boundary and its two
# neighbours, which share most of their root paths, and every update walks
# upwards from a known leaf; the loads along a walk are independent of each
# other, which lets the memory system overlap them.


@njit(cache=True)
def _tree_set(tree, leaf, key):
    tree[leaf, 0] = key
    i = leaf >> 1
    while i >= 1:
        a = 2 * i
        c = a
        if tree[a + 1, 0] < tree[a, 0] or (tree[a + 1, 0] == tree[a, 0] and tree[a + 1, 1] < tree[a, 1]):
            c = a + 1
        if tree[i, 0] == tree[c, 0] and tree[i, 1] == tree[c, 1]:
            break
        tree[i, 0] = tree[c, 0]
        tree[i, 1] = tree[c, 1]
        i >>= 1


# Each live block keeps its record in the rows of both of its end indices
# ``lo`` and ``hi``: (lambda_ref, beta_ref, slope, other_end << 32 | node),
# the last column read as int64. Every row a fusion touches is then adjacent
# to the popped boundary or to one of the new block's ends, and no lookup
# chain is needed to find a block from a boundary. Interior rows go stale
# and are never read. Tree output is append-only.
_LAM, _BETA, _SLOPE, _PACK = range(4)


@njit(cache=True)
def _fuse_all(y, d):
    n = y.size
    live = np.zeros((n, 4))
    ilive = live.view(np.int64)
    m = max(n - 1, 0)
    t_lam = np.zeros(m)
    t_beta = np.zeros(m)
    t_slope = np.zeros(m)
    t_left = np.zeros(m, np.int32)
    t_right = np.zeros(m, np.int32)
    t_lo = np.zeros(m, np.int32)
    t_hi = np.zeros(m, np.int32)
    leaf_slope = np.zeros(n)
    for k in range(n):
        # slope_k = -(sign(y_k - y_{k-1}) + sign(y_k - y_{k+1})) = d[k-1] - d[k]
        s = 0.0
        if k > 0:
            s += d[k - 1]
        if k < n - 1:
            s -= d[k]
        leaf_slope[k] = s
        live[k, _BETA] = y[k]
        live[k, _SLOPE] = s
        ilive[k, _PACK] = (k << 32) | k

    nb = n - 1
    S = max(nb, 1)
    tree = np.empty((2 * S, 2))
    tree[:, 0] = np.inf
    tree[:, 1] = 0.0
    for p in range(nb):
        h = _pair_hit(d[p], y[p], leaf_slope[p], y[p + 1], leaf_slope[p + 1], 0.0)
        tree[S + p, 0] = h if h >= 0.0 else np.inf
        tree[S + p, 1] = p
    for i in range(S - 1, 0, -1):
        a = 2 * i
        c = a
        if tree[a + 1, 0] < tree[a, 0] or (tree[a + 1, 0] == tree[a, 0] and tree[a + 1, 1] < tree[a, 1]):
            c = a + 1
        tree[i, 0] = tree[c, 0]
        tree[i, 1] = tree[c, 1]

    mask = np.int64(0xFFFFFFFF)
    j = 0
    while nb > 0 and tree[1, 0] < np.inf:
        h = tree[1, 0]
        p = np.int64(tree[1, 1])
        _tree_set(tree, S + p, np.inf)
        # left block ends at p, right block starts at p + 1
        pa = ilive[p, _PACK]
        pb = ilive[p + 1, _PACK]
        la = pa >> 32
        hi_c = pb >> 32
        ba = live[p, _BETA] + live[p, _SLOPE] * (h - live[p, _LAM])
        bb = live[p + 1, _BETA] + live[p + 1, _SLOPE] * (h - live[p + 1, _LAM])
        sa = p + 1 - la
        sb = hi_c - p
        # equal values keep their common value bit for bit
        bc = ba if ba == bb else (sa * ba + sb * bb) / (sa + sb)
        dleft = float(d[la - 1]) if la > 0 else 0.0  # sign(left - c)
        dright = float(d[hi_c]) if hi_c < n - 1 else 0.0  # sign(c - right)
        s = (dleft - dright) / (sa + sb)
        c = n + j
        t_lam[j] = h
        t_beta[j] = bc
        t_slope[j] = s
        t_left[j] = pa & mask
        t_right[j] = pb & mask
        t_lo[j] = la
        t_hi[j] = hi_c
        j += 1
        for r in (la, hi_c):
            live[r, _LAM] = h
            live[r, _BETA] = bc
            live[r, _SLOPE] = s
        ilive[la, _PACK] = (hi_c << 32) | c
        ilive[hi_c, _PACK] = (la << 32) | c
        if la > 0:
            q = la - 1  # last index of the left neighbour
            bl = live[q, _BETA] + live[q, _SLOPE] * (h - live[q, _LAM])
            hh = _pair_hit(dleft, bl, live[q, _SLOPE], bc, s, h)
            _tree_set(tree, S + q, hh if hh >= 0.0 else np.inf)
        if hi_c < n - 1:
            q = hi_c + 1  # first index of the right neighbour
            br = live[q, _BETA] + live[q, _SLOPE] * (h - live[q, _LAM])
            hh = _pair_hit(dright, bc, s, br, live[q, _SLOPE], h)
            _tree_set(tree, S + hi_c, hh if hh >= 0.0 else np.inf)
    return leaf_slope, t_lam, t_beta, t_slope, t_left, t_right, t_lo, t_hi, j


@njit(cache=True)
def _pair_hit(order, b_left, s_left, b_right, s_right, lam_now):
    """Meeting value of adjacent blocks given their fixed order ``sign(left - right)``.

    Returns ``lam_now`` for equal-valued neighbours in the data
    (``order == 0``) and for blocks that already touch, or have crossed by a
    rounding error: on a chain, touching blocks stay fused. Returns -1 if they
    never meet.
    """
    if order == 0:
        return lam_now
    gap = order * (b_left - b_right)
    if gap <= 0:
        return lam_now
    closing = order * (s_right - s_left)
    if closing <= 0:
        return -1.0
    # a positive gap closes strictly later, even when the quotient underflows
    return max(lam_now + gap / closing, np.nextafter(lam_now, np.inf))


def _active_nodes(tree: PathTree, lambda2: float) -> np.ndarray:
    n = tree.n
    m = int(np.searchsorted(tree.breakpoints, lambda2, side="right"))
    cutoff = n + m
    ids = np.arange(cutoff)
    par = tree.parent[:cutoff]
    return ids[(par < 0) | (par >= cutoff)]


def eval_path(tree: PathTree, lambda2) -> np.ndarray:
    """Solution at ``lambda2`` (``lambda1 = 0``).

    A scalar gives a vector of length ``n``; a sequence of values gives an
    array of shape ``(len(lambda2), n)``.
    """
    lams = np.asarray(lambda2, dtype=float)
    if np.any(lams < 0) or not np.all(np.isfinite(lams)):
        raise InvalidArgument("lambda2 must be finite and non-negative")
    if lams.ndim == 0:
        return _eval_one(tree, float(lams))
    return np.vstack([_eval_one(tree, float(v)) for v in lams])


def _eval_one(tree, lambda2):
    # Blocks live at lambda2 are nodes created at or before it whose parent
    # is created after it; they tile 0..n-1 so values are filled by range.
    act = _active_nodes(tree, lambda2)
    vals = tree.beta[act] + tree.slope[act] * (lambda2 - tree.lam[act])
    order = np.argsort(tree.lo[act])
    act, vals = act[order], vals[order]
    return np.repeat(vals, tree.hi[act] - tree.lo[act] + 1)


def eval_path_climb(tree: PathTree, lambda2: float) -> np.ndarray:
    """Leaf-to-root evaluation; reference implementation for :func:`eval_path`."""
    if lambda2 < 0:
        raise InvalidArgument("lambda2 must be non-negative")
    out = np.empty(tree.n)
    lam, par = tree.lam, tree.parent
    for k in range(tree.n):
        node = k
        while par[node] >= 0 and lam[par[node]] <= lambda2:
            node = par[node]
        out[k] = tree.beta[node] + tree.slope[node] * (lambda2 - lam[node])
    return out


def fusion_segments(tree: PathTree):
    """Distinct breakpoint values including 0, as a sorted array."""
    return np.unique(np.concatenate(([0.0], tree.breakpoints)))


@dataclass
class SubgradientReport:
    bound_violation: float  # max(|tau| - lambda2, 0)
    sign_violation: float  # max |tau - lambda2 * sign| over unequal neighbours
    boundary_residual: float  # |tau_{n-1,n}|, must vanish

    @property
    def worst(self) -> float:
        return max(self.bound_violation, self.sign_violation, self.boundary_residual)

    def ok(self, tol: float) -> bool:
        return self.worst <= tol


def check_subgradient_1d(y, beta, lambda2: float) -> SubgradientReport:
    """Optimality check on the chain by forward recursion of the subgradients.

    ``tau[k]`` is the scaled subgradient on edge ``(k, k+1)``:
    ``tau[k] = tau[k-1] + y[k] - beta[k]`` with ``tau[-1] = 0``.
    """
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    tau = np.cumsum(y - beta)
    inner = tau[:-1]
    bound = float(np.max(np.abs(inner) - lambda2, initial=0.0))
    diff = beta[:-1] - beta[1:]
    mask = diff != 0
    sign_err = float(np.max(np.abs(inner[mask] - lambda2 * np.sign(diff[mask])), initial=0.0))
    return SubgradientReport(max(bound, 0.0), sign_err, float(abs(tau[-1])))


def dump_tree_rows(tree: PathTree):
    """Rows ``(lambda, child_left, child_right, beta_at_creation, slope)`` per internal node."""
    for c in range(tree.n, len(tree.lam)):
        yield (float(tree.lam[c]), int(tree.left[c]), int(tree.right[c]), float(tree.beta[c]), float(tree.slope[c]))


def tree_from_rows(y, rows) -> PathTree:
    """Rebuild a :class:`PathTree` from ``y`` and the rows of :func:`dump_tree_rows`."""
    y = _check_signal(y)
    n = y.size
    rows = list(rows)
    if len(rows) != n - 1:
        raise InvalidArgument(f"expected {n - 1} internal nodes, got {len(rows)}")
    size = 2 * n - 1
    lam = np.zeros(size)
    beta = np.concatenate((y, np.zeros(n - 1)))
    slope = np.zeros(size)
    left = np.full(size, -1, dtype=np.int64)
    right = np.full(size, -1, dtype=np.int64)
    parent = np.full(size, -1, dtype=np.int64)
    lo = np.concatenate((np.arange(n), np.zeros(n - 1, dtype=np.int64)))
    hi = lo.copy()
    for j, (lv, a, b, bv, sv) in enumerate(rows):
        c = n + j
        lam[c], beta[c], slope[c] = lv, bv, sv
        left[c], right[c] = a, b
        parent[a] = parent[b] = c
        lo[c], hi[c] = lo[a], hi[b]
    # Leaf slopes are not in the dump; recover them from the data order.
    d = np.sign(y[:-1] - y[1:])
    slope[:n] = np.concatenate(([0.0], d)) - np.concatenate((d, [0.0]))
    return PathTree(y, lam, beta, slope, left, right, parent, lo, hi)
