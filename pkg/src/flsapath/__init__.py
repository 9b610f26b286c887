"""Exact solution paths of the fused lasso signal approximator.

``solve_path_1d`` handles chains, ``solve_path_general`` arbitrary penalty
graphs (optionally in the approximate capped mode). Solutions for any
``lambda1`` follow by soft-thresholding the ``lambda1 = 0`` path.
``oracle_solve`` is an independent single-point solver used for checking.
"""
from .errors import ConvergenceError, InvalidArgument, InvariantError, ParseError
from .general import (
    GeneralPathStore,
    build_flow_graph,
    certify_or_split,
    compute_pushes,
    eval_general,
    eval_general_with_l1,
    hitting_time_general,
    slope_general,
    solve_path_general,
    violation_time,
)
from .graph import PenaltyGraph, chain_graph, from_edge_list, grid_graph, read_edge_list, write_edge_list
from .maxflow import UNBOUNDED, FlowNetwork, FlowResult, max_flow, min_cut_value_bruteforce
from .oracle import check_kkt, oracle_solve
from .path1d import (
    PathTree,
    check_subgradient_1d,
    eval_path,
    hitting_time_1d,
    soft_threshold,
    solve_path_1d,
)
from .simulate import simulate_1d, simulate_2d

__all__ = [
    "ConvergenceError",
    "FlowNetwork",
    "FlowResult",
    "GeneralPathStore",
    "InvalidArgument",
    "InvariantError",
    "ParseError",
    "PathTree",
    "PenaltyGraph",
    "UNBOUNDED",
    "build_flow_graph",
    "certify_or_split",
    "chain_graph",
    "check_kkt",
    "check_subgradient_1d",
    "compute_pushes",
    "eval_general",
    "eval_general_with_l1",
    "eval_path",
    "from_edge_list",
    "grid_graph",
    "hitting_time_1d",
    "hitting_time_general",
    "max_flow",
    "min_cut_value_bruteforce",
    "oracle_solve",
    "read_edge_list",
    "simulate_1d",
    "simulate_2d",
    "slope_general",
    "soft_threshold",
    "solve_path_1d",
    "solve_path_general",
    "violation_time",
    "write_edge_list",
]
