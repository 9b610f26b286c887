"""Walk through the 1-D solution path on a noisy step signal.

    python3 demos/path_1d.py

Solves the whole lambda2 path once, reads off solutions at a few penalty
values, applies a lambda1 by soft-thresholding, and checks one point against
the independent oracle.
"""
import numpy as np

from flsapath import chain_graph, check_subgradient_1d, eval_path, oracle_solve, simulate_1d, soft_threshold, solve_path_1d

y, clean = simulate_1d(200, seed=1, return_clean=True)
tree = solve_path_1d(y)
bps = tree.breakpoints
print(f"n = {y.size}, {bps.size} fusions, last at lambda2 = {bps[-1]:.3f}")

# Number of distinct blocks and distance to the noiseless signal along the path.
for lam in (0.0, 0.1, 0.5, 1.0, 5.0):
    beta = eval_path(tree, lam)
    blocks = 1 + int(np.sum(tree.lam[tree.n :] > lam))
    rmse = np.sqrt(np.mean((beta - clean) ** 2))
    print(f"lambda2 = {lam:4.1f}: {blocks:3d} blocks, RMSE to clean signal {rmse:.3f}")

# Any lambda1 follows from the lambda1 = 0 path.
lam1, lam2 = 0.3, 0.5
beta = soft_threshold(eval_path(tree, lam2), lam1)
print(f"(lambda1, lambda2) = ({lam1}, {lam2}): {np.count_nonzero(beta == 0)} coefficients set to zero")

# Cross-check one point.
ref = oracle_solve(y, chain_graph(y.size), lam2, lam1)
print(f"max |path - oracle| = {np.max(np.abs(beta - ref)):.2e}")
print(f"subgradient residual at lambda2 = {lam2}: {check_subgradient_1d(y, eval_path(tree, lam2), lam2).worst:.2e}")
