"""Acceptance suite: one test, and one PASS/FAIL line, per criterion.

Expensive runs are computed once per module and shared by the criteria that
inspect them.
"""
import itertools
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from flsapath import (
    UNBOUNDED,
    FlowNetwork,
    chain_graph,
    check_kkt,
    check_subgradient_1d,
    eval_general,
    eval_path,
    grid_graph,
    max_flow,
    min_cut_value_bruteforce,
    oracle_solve,
    simulate_2d,
    solve_path_1d,
    solve_path_general,
)
from flsapath.general import anchors_increasing, continuity_error
from flsapath.path1d import fusion_segments

from _helpers import midpoints, random_signal

TOL_ORACLE = 1e-5
TOL_KKT = 1e-6
TOL_CHAIN = 1e-9
TOL_CONT = 1e-9
TOL_MASS = 1e-8
TOL_TAU = 1e-8
KINDS = ("normal", "integer", "steps")


# -- shared runs ---------------------------------------------------------------


@pytest.fixture(scope="module")
def runs_1d():
    """200 seeded signals, n in 2..64, with their paths."""
    out = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 65))
        y = random_signal(rng, n, KINDS[seed % 3])
        out.append((y, solve_path_1d(y)))
    return out


@pytest.fixture(scope="module")
def runs_2d():
    """20 seeded 8x8 and 5 seeded 16x16 simulated images, exact paths."""
    out = []
    for side, seeds in ((8, range(20)), (16, range(100, 105))):
        g = grid_graph(side, side)
        for seed in seeds:
            y = simulate_2d(side, seed).ravel()
            out.append((y, g, solve_path_general(y, g)))
    return out


@pytest.fixture(scope="module")
def runs_chain():
    """50 seeded chains, n <= 200, solved by both engines."""
    out = []
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(2, 201))
        y = random_signal(rng, n, KINDS[seed % 3])
        out.append((y, solve_path_1d(y), solve_path_general(y, chain_graph(n))))
    return out


def distinct(values, tol):
    """Sorted values with runs closer than ``tol`` collapsed to their first member."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return v
    keep = np.concatenate(([True], np.diff(v) > tol))
    return v[keep]


# -- criteria ------------------------------------------------------------------


def test_criterion_1_oracle_equivalence_1d(runs_1d, verdict):
    worst = 0.0
    for y, tree in runs_1d:
        g = chain_graph(y.size)
        for lam in np.linspace(0, 1.2 * tree.breakpoints[-1], 10):
            worst = max(worst, float(np.max(np.abs(eval_path(tree, lam) - oracle_solve(y, g, lam)))))
    verdict(
        "1 oracle equivalence, 1-D",
        worst <= TOL_ORACLE,
        f"worst sup-norm {worst:.2e} (limit {TOL_ORACLE:.0e}) over {len(runs_1d)} signals x 10 values",
    )


def test_criterion_2_oracle_equivalence_2d(runs_2d, verdict):
    worst = 0.0
    for y, g, store in runs_2d:
        for lam in np.linspace(0, 0.5, 10):
            worst = max(worst, float(np.max(np.abs(eval_general(store, lam) - oracle_solve(y, g, lam)))))
    verdict(
        "2 oracle equivalence, 2-D exact",
        worst <= TOL_ORACLE,
        f"worst sup-norm {worst:.2e} (limit {TOL_ORACLE:.0e}) over {len(runs_2d)} images x 10 values",
    )


def test_criterion_3_approximation_endpoints(runs_2d, verdict):
    lams = np.linspace(0, 0.5, 10)
    identical = True
    worst_rmsd = 0.0
    for y, g, exact in runs_2d:
        ref = eval_general(exact, lams)
        big = solve_path_general(y, g, cap=g.n + 1)
        identical &= np.array_equal(eval_general(big, lams), ref)
        rough = solve_path_general(y, g, cap=1)
        worst_rmsd = max(worst_rmsd, float(np.sqrt(np.mean((eval_general(rough, lams) - ref) ** 2))))
    ok = identical and np.isfinite(worst_rmsd) and worst_rmsd <= 0.2
    verdict(
        "3 approximation endpoints",
        ok,
        f"K=n+1 bit-identical: {identical}; K=1 worst RMSD {worst_rmsd:.3f} (limit 0.2)",
    )


def test_criterion_4_monotone_fusion_1d(runs_1d, runs_chain, verdict):
    bad = 0
    trees = [t for _, t in runs_1d] + [t for _, t, _ in runs_chain]
    for tree in trees:
        n = tree.n
        inner = np.arange(n, 2 * n - 1)
        ok = tree.breakpoints.size == n - 1
        # each fusion joins two adjacent live blocks, each used exactly once
        ok &= np.array_equal(tree.hi[tree.left[inner]] + 1, tree.lo[tree.right[inner]])
        ok &= np.array_equal(np.sort(np.concatenate((tree.left[inner], tree.right[inner]))), np.arange(2 * n - 2))
        ok &= bool(np.all(tree.lam[inner] >= tree.lam[tree.left[inner]]))
        ok &= bool(np.all(tree.lam[inner] >= tree.lam[tree.right[inner]]))
        ok &= tree.lo[tree.root] == 0 and tree.hi[tree.root] == n - 1
        bad += not ok
    splits = sum(store.n_splits for _, _, store in runs_chain)
    verdict(
        "4 monotone fusion in 1-D",
        bad == 0 and splits == 0,
        f"{len(trees)} paths, {bad} without exactly n-1 adjacent fusions; {splits} splits in the general engine on chains",
    )


def test_criterion_5_subgradient_feasibility(runs_1d, runs_2d, verdict):
    worst_sub = worst_kkt = 0.0
    points = 0
    for y, tree in runs_1d:
        g = chain_graph(y.size)
        for lam in midpoints(fusion_segments(tree)):
            beta = eval_path(tree, lam)
            worst_sub = max(worst_sub, check_subgradient_1d(y, beta, lam).worst)
            worst_kkt = max(worst_kkt, check_kkt(y, g, beta, lam).infeasibility)
            points += 1
    for y, g, store in runs_2d:
        for lam in midpoints(store.breakpoints()):
            worst_kkt = max(worst_kkt, check_kkt(y, g, eval_general(store, lam), lam).infeasibility)
            points += 1
    verdict(
        "5 subgradient feasibility",
        worst_sub <= TOL_KKT and worst_kkt <= TOL_KKT,
        f"chain check {worst_sub:.2e}, flow check {worst_kkt:.2e} (limit {TOL_KKT:.0e}) at {points} midpoints",
    )


def _random_network(rng, integer):
    n = int(rng.integers(1, 9))
    draw = (lambda: float(rng.integers(0, 6))) if integer else (lambda: float(rng.uniform(0, 5)))
    net = FlowNetwork(n)
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < 0.5:
            c_uv = UNBOUNDED if rng.random() < 0.15 else draw()
            c_vu = UNBOUNDED if rng.random() < 0.15 else draw()
            net.add_edge(u, v, c_uv, c_vu)
    for k in range(n):
        r = rng.random()
        if r < 0.4:
            net.add_edge(net.source, k, draw())
        elif r < 0.8:
            net.add_edge(k, net.sink, draw())
    return net


def test_criterion_6_maxflow_min_cut(verdict):
    rng = np.random.default_rng(6)
    int_bad = 0
    real_err = 0.0
    for _ in range(1000):
        net = _random_network(rng, integer=True)
        int_bad += max_flow(net).value != min_cut_value_bruteforce(net)
    for _ in range(1000):
        net = _random_network(rng, integer=False)
        real_err = max(real_err, abs(max_flow(net).value - min_cut_value_bruteforce(net)))
    verdict(
        "6 max-flow equals min-cut",
        int_bad == 0 and real_err <= 1e-9,
        f"1000 integer networks, {int_bad} mismatches; 1000 real networks, worst gap {real_err:.1e} (limit 1e-09)",
    )


SCALING_SCRIPT = textwrap.dedent(
    """
    import time
    import numpy as np
    from flsapath import solve_path_1d

    solve_path_1d(np.random.default_rng(0).normal(size=1000))  # compile
    for n in (10**5, 10**6):
        y = np.random.default_rng(n).normal(size=n)
        t = time.perf_counter()
        solve_path_1d(y)
        print(time.perf_counter() - t)
    """
)


def test_criterion_7_scaling(verdict):
    # Fresh interpreter so earlier tests do not affect memory layout or caches.
    proc = subprocess.run([sys.executable, "-c", SCALING_SCRIPT], capture_output=True, text=True, check=True)
    t5, t6 = (float(v) for v in proc.stdout.split())
    ratio = t6 / t5
    verdict(
        "7 complexity scaling, 1-D",
        ratio <= 15 and t6 <= 30,
        f"n=1e5 {t5:.3f} s, n=1e6 {t6:.3f} s, ratio {ratio:.2f} (limits 15 and 30 s)",
    )


def test_criterion_8_chain_cross_check(runs_chain, verdict):
    worst_beta = worst_event = 0.0
    count_bad = 0
    for y, tree, store in runs_chain:
        a = distinct(fusion_segments(tree), TOL_CHAIN)
        b = distinct(store.breakpoints(), TOL_CHAIN)
        if a.size != b.size:
            count_bad += 1
            continue
        worst_event = max(worst_event, float(np.max(np.abs(a - b))))
        lams = np.concatenate((a, midpoints(a)))
        worst_beta = max(worst_beta, float(np.max(np.abs(eval_path(tree, lams) - eval_general(store, lams)))))
    verdict(
        "8 chain cross-check",
        count_bad == 0 and worst_event <= TOL_CHAIN and worst_beta <= TOL_CHAIN,
        f"{len(runs_chain)} chains; {count_bad} event-count mismatches, event gap {worst_event:.1e}, "
        f"trajectory gap {worst_beta:.1e} (limit {TOL_CHAIN:.0e})",
    )


def _tree_continuity(tree):
    """Each child's segment, extended to its parent's creation, lands on the parent."""
    n = tree.n
    inner = np.arange(n, 2 * n - 1)
    err = 0.0
    for child in (tree.left[inner], tree.right[inner]):
        pred = tree.beta[child] + tree.slope[child] * (tree.lam[inner] - tree.lam[child])
        err = max(err, float(np.max(np.abs(pred - tree.beta[inner]), initial=0.0)))
    return err


def test_criterion_9_invariant_suites(runs_1d, runs_2d, runs_chain, verdict):
    mass = cont = tau = 0.0
    ordered = True
    for y, tree in runs_1d + [(y, t) for y, t, _ in runs_chain]:
        cont = max(cont, _tree_continuity(tree))
        for lam in np.concatenate((fusion_segments(tree), midpoints(fusion_segments(tree)))):
            beta = eval_path(tree, lam)
            mass = max(mass, abs(beta.sum() - y.sum()))
            tau = max(tau, check_subgradient_1d(y, beta, lam).bound_violation)
    stores = [(y, g, s) for y, g, s in runs_2d] + [(y, chain_graph(y.size), s) for y, _, s in runs_chain]
    for y, g, store in stores:
        cont = max(cont, continuity_error(store))
        ordered &= anchors_increasing(store)
        tau = max(tau, store.diagnostics["max_tau_excess"])
        labels = g.components()
        bps = store.breakpoints()
        for lam in np.concatenate((bps, midpoints(bps))):
            beta = eval_general(store, lam)
            for c in np.unique(labels):
                mass = max(mass, abs(beta[labels == c].sum() - y[labels == c].sum()))
    verdict(
        "9 conservation and continuity",
        mass <= TOL_MASS and cont <= TOL_CONT and tau <= TOL_TAU and ordered,
        f"mass {mass:.1e} (limit {TOL_MASS:.0e}), continuity {cont:.1e} (limit {TOL_CONT:.0e}), "
        f"tau excess {tau:.1e} (limit {TOL_TAU:.0e}), anchors increasing: {ordered}",
    )
