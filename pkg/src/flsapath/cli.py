"""Command line front end.

    python -m flsapath --graph chain --input y.txt --lambda2 0:1:50
    python -m flsapath --graph grid=16x16 --input img.csv --mode verify
    python -m flsapath --graph grid=64x64 --mode simulate --seed 3 --output img.csv

Exit codes: 0 success, 2 bad command line, 3 unparsable input, 4 I/O
failure, 5 invalid argument, 6 verification above tolerance, 7 oracle did
not converge, 8 internal invariant violated.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
import time

import numpy as np

from . import io
from .errors import ConvergenceError, InvalidArgument, InvariantError
from .general import eval_general, solve_path_general, write_anchors, write_event_log
from .graph import chain_graph, grid_graph, read_edge_list
from .oracle import oracle_solve
from .path1d import dump_tree_rows, eval_path, soft_threshold, solve_path_1d
from .simulate import simulate_1d, simulate_2d

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_IO, EXIT_INVALID, EXIT_VERIFY, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4, 5, 6, 7, 8

DEFAULT_VERIFY_TOL = 1e-5


def parse_lambdas(text: str) -> np.ndarray:
    """``"a,b,c"`` or ``"lo:hi:count"`` (inclusive, evenly spaced)."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            count = int(count)
            if count < 1:
                raise InvalidArgument(f"range count must be at least 1, got {count}")
            vals = np.linspace(float(lo), float(hi), count)
        else:
            vals = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise InvalidArgument(f"cannot parse lambda2 request {text!r}") from None
    if vals.size == 0 or np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise InvalidArgument(f"lambda2 values must be finite and non-negative: {text!r}")
    return vals


def parse_graph(text: str):
    """Returns ``(kind, arg)``: ``("chain", n or None)``, ``("grid", (r, c))`` or ``("edgelist", path)``."""
    kind, _, arg = text.partition("=")
    if kind == "chain":
        if not arg:
            return "chain", None
        try:
            return "chain", int(arg)
        except ValueError:
            raise InvalidArgument(f"bad chain length {arg!r}") from None
    if kind == "grid":
        try:
            r, c = (int(v) for v in arg.lower().split("x"))
        except ValueError:
            raise InvalidArgument(f"grid spec must look like grid=RxC, got {text!r}") from None
        return "grid", (r, c)
    if kind == "edgelist" and arg:
        return "edgelist", arg
    raise InvalidArgument(f"unknown graph spec {text!r}; use chain, grid=RxC or edgelist=FILE")


def build_parser():
    p = argparse.ArgumentParser(prog="flsapath", description="Fused lasso signal approximator solution paths.")
    p.add_argument("--graph", required=True, help="chain | grid=RxC | edgelist=FILE")
    p.add_argument("--input", help="signal (one value per line or a CSV row) or image (CSV matrix)")
    p.add_argument("--lambda2", default="0:1:50", help="comma list or lo:hi:count (default 0:1:50)")
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--cap", type=int, default=None, help="approximate mode: never split sets of this size or larger")
    p.add_argument("--mode", choices=["solve", "path-dump", "simulate", "bench", "verify"], default="solve")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", default="-", help="output file, '-' for stdout")
    p.add_argument("--anchors", help="path-dump on a general graph: also write per-node anchors here")
    return p


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


class _Problem:
    """Loaded data plus the matching graph; ``chain`` selects the 1-D solver."""

    def __init__(self, args):
        kind, arg = parse_graph(args.graph)
        if not args.input:
            raise InvalidArgument(f"--input is required for mode {args.mode}")
        if kind == "grid":
            r, c = arg
            data = io.read_matrix(args.input)
            if data.size != r * c:
                raise InvalidArgument(f"grid {r}x{c} needs {r * c} values, input has {data.size}")
            self.y = data.ravel()
            self.graph = grid_graph(r, c)
            self.chain = False
        elif kind == "edgelist":
            self.graph = read_edge_list(arg)
            self.y = io.read_vector(args.input)
            if self.y.size != self.graph.n:
                raise InvalidArgument(f"edge list has {self.graph.n} nodes, input has {self.y.size} values")
            self.chain = False
        else:
            self.y = io.read_vector(args.input)
            if arg is not None and arg != self.y.size:
                raise InvalidArgument(f"chain={arg} but input has {self.y.size} values")
            self.graph = None
            self.chain = True
        self.cap = args.cap
        self.path = None

    def solve(self):
        if self.chain:
            self.path = solve_path_1d(self.y)
        else:
            self.path = solve_path_general(self.y, self.graph, cap=self.cap)
        return self.path

    def evaluate(self, lambdas, lambda1):
        ev = eval_path if self.chain else eval_general
        return [soft_threshold(ev(self.path, float(l)), lambda1) for l in lambdas]

    def oracle_graph(self):
        return chain_graph(self.y.size) if self.chain else self.graph


def _simulate(args, out):
    kind, arg = parse_graph(args.graph)
    if kind == "chain":
        if arg is None:
            raise InvalidArgument("simulate needs a length: --graph chain=N")
        io.write_vector(out, simulate_1d(arg, args.seed))
    elif kind == "grid":
        r, c = arg
        if r != c:
            raise InvalidArgument("simulated images are square; use grid=NxN")
        io.write_matrix(out, simulate_2d(r, args.seed))
    else:
        raise InvalidArgument("simulate supports chain=N and grid=NxN")


def run(args) -> int:
    if args.lambda1 < 0:
        raise InvalidArgument("--lambda1 must be non-negative")
    if args.cap is not None and args.cap < 1:
        raise InvalidArgument("--cap must be at least 1")
    if args.mode == "simulate":
        with _open_out(args.output) as out:
            _simulate(args, out)
        return EXIT_OK

    lambdas = parse_lambdas(args.lambda2)
    t0 = time.perf_counter()
    prob = _Problem(args)
    t1 = time.perf_counter()
    path = prob.solve()
    t2 = time.perf_counter()

    if args.mode == "solve":
        betas = prob.evaluate(lambdas, args.lambda1)
        with _open_out(args.output) as out:
            io.write_solutions(out, lambdas, betas, args.lambda1, args.format)
        return EXIT_OK

    if args.mode == "path-dump":
        with _open_out(args.output) as out:
            if prob.chain:
                header = ["lambda", "child_left", "child_right", "beta_at_creation", "slope"]
                io.write_table(out, header, list(dump_tree_rows(path)), args.format)
            else:
                write_event_log(path, out)
        if args.anchors and not prob.chain:
            with open(args.anchors, "w") as fh:
                write_anchors(path, fh)
        return EXIT_OK

    if args.mode == "bench":
        betas = prob.evaluate(lambdas, args.lambda1)
        t3 = time.perf_counter()
        events = path.n - 1 if prob.chain else len(path.events)
        rows = [("load", t1 - t0), ("solve", t2 - t1), ("evaluate", t3 - t2)]
        with _open_out(args.output) as out:
            out.write(f"# n={prob.y.size} events={events} lambdas={len(betas)}\n")
            io.write_table(out, ["phase", "seconds"], rows, args.format)
        return EXIT_OK

    # verify
    tol = float(os.environ.get("FLSA_TOL", DEFAULT_VERIFY_TOL))
    graph = prob.oracle_graph()
    betas = prob.evaluate(lambdas, args.lambda1)
    rows = []
    for lam, beta in zip(lambdas, betas):
        ref = oracle_solve(prob.y, graph, float(lam), args.lambda1)
        rows.append((float(lam), float(np.max(np.abs(beta - ref)))))
    worst = max(err for _, err in rows)
    with _open_out(args.output) as out:
        io.write_table(out, ["lambda", "sup_norm_error"], rows, args.format)
        if args.format == "csv":
            out.write(f"# max sup-norm error {worst:.3e} (tolerance {tol:.1e})\n")
    print(f"max sup-norm error {worst:.3e} (tolerance {tol:.1e})", file=sys.stderr)
    return EXIT_OK if worst <= tol else EXIT_VERIFY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except io.ParseError as exc:
        print(f"flsapath: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidArgument as exc:
        print(f"flsapath: invalid argument: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"flsapath: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as exc:
        print(f"flsapath: {exc} (last residual {exc.residual})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except InvariantError as exc:
        print(f"flsapath: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
