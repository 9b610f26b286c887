"""Plain-text readers and writers used by the command line front end.

All floats are written with 17 significant digits so that values survive a
write/read round trip bit for bit.
"""
from __future__ import annotations

import csv
import json

import numpy as np

from .errors import ParseError


def fmt(x) -> str:
    return format(float(x), ".17g")


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            cells = [c.strip() for c in row]
            if not any(cells) or cells[0].startswith("#"):
                continue
            yield lineno, cells


def _floats(path, lineno, cells):
    try:
        return [float(c) for c in cells if c != ""]
    except ValueError:
        raise ParseError(f"{path}:{lineno}: expected numbers, got {','.join(cells)!r}") from None


def read_vector(path) -> np.ndarray:
    """Signal from one value per line, or from a single comma-separated row."""
    values = []
    for lineno, cells in _rows(path):
        if len(cells) == 1 and len(cells[0].split()) > 1:
            cells = cells[0].split()
        values += _floats(path, lineno, cells)
    if not values:
        raise ParseError(f"{path}: no values found")
    return np.array(values)


def read_matrix(path) -> np.ndarray:
    """Row-major CSV matrix; every row must have the same length."""
    rows = []
    width = None
    for lineno, cells in _rows(path):
        vals = _floats(path, lineno, cells)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no values found")
    return np.array(rows)


def write_vector(fh, values) -> None:
    for v in np.ravel(values):
        fh.write(fmt(v) + "\n")


def write_matrix(fh, mat) -> None:
    for row in np.atleast_2d(mat):
        fh.write(",".join(fmt(v) for v in row) + "\n")


def write_solutions(fh, lambdas, betas, lambda1: float, form: str = "csv") -> None:
    """Solutions in long format ``lambda,node,beta``, or the JSON equivalent."""
    if form == "json":
        doc = {
            "lambda1": float(lambda1),
            "solutions": [{"lambda": float(l), "beta": [float(v) for v in b]} for l, b in zip(lambdas, betas)],
        }
        json.dump(doc, fh)
        fh.write("\n")
        return
    fh.write("lambda,node,beta\n")
    for lam, beta in zip(lambdas, betas):
        ls = fmt(lam)
        for k, v in enumerate(beta):
            fh.write(f"{ls},{k},{fmt(v)}\n")


def read_solutions_csv(path):
    """Inverse of :func:`write_solutions` in CSV form: ``{lambda: beta}``."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lam, node, beta in reader:
            out.setdefault(float(lam), {})[int(node)] = float(beta)
    return {lam: np.array([d[k] for k in sorted(d)]) for lam, d in out.items()}


def write_table(fh, header, rows, form: str = "csv") -> None:
    """Generic table; floats use 17 significant digits."""
    cell = lambda v: fmt(v) if isinstance(v, (float, np.floating)) else str(v)
    if form == "json":
        json.dump([dict(zip(header, (float(v) if isinstance(v, (float, np.floating)) else v for v in r))) for r in rows], fh)
        fh.write("\n")
        return
    fh.write(",".join(header) + "\n")
    for r in rows:
        fh.write(",".join(cell(v) for v in r) + "\n")


def read_table(path):
    """CSV table with a header line, as a list of string rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]
