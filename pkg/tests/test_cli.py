import json
import subprocess
import sys

import numpy as np
import pytest

from flsapath import eval_general, grid_graph, solve_path_general
from flsapath.cli import main, parse_lambdas
from flsapath.general import store_from_anchors
from flsapath.io import read_solutions_csv, read_table
from flsapath.path1d import eval_path, tree_from_rows


@pytest.fixture
def signal(tmp_path):
    path = tmp_path / "y.txt"
    path.write_text("1\n2\n3\n5\n4\n")
    return path


@pytest.fixture
def image(tmp_path):
    path = tmp_path / "img.csv"
    assert main(["--graph", "grid=8x8", "--mode", "simulate", "--seed", "3", "--output", str(path)]) == 0
    return path


def test_lambda_requests():
    assert parse_lambdas("0:1:5").tolist() == [0, 0.25, 0.5, 0.75, 1]
    assert parse_lambdas("0.1,2").tolist() == [0.1, 2]


def test_solve_at_zero_returns_input(signal, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["--graph", "chain", "--input", str(signal), "--lambda2", "0", "--output", str(out)]) == 0
    sol = read_solutions_csv(out)
    assert sol[0.0].tolist() == [1, 2, 3, 5, 4]


def test_json_output(signal, tmp_path):
    out = tmp_path / "out.json"
    assert main(["--graph", "chain=5", "--input", str(signal), "--lambda2", "0,10", "--lambda1", "1", "--format", "json", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["lambda1"] == 1
    np.testing.assert_allclose(doc["solutions"][1]["beta"], 2.0)


def test_simulate_image(image):
    data = np.loadtxt(image, delimiter=",")
    assert data.shape == (8, 8)


def test_simulate_signal(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["--graph", "chain=200", "--mode", "simulate", "--seed", "1", "--output", str(out)]) == 0
    assert np.loadtxt(out).shape == (200,)


def test_verify_grid(image, tmp_path, monkeypatch):
    monkeypatch.delenv("FLSA_TOL", raising=False)
    out = tmp_path / "v.csv"
    assert main(["--graph", "grid=8x8", "--input", str(image), "--lambda2", "0:0.5:50", "--mode", "verify", "--output", str(out)]) == 0
    header, rows = read_table(out)
    errs = [float(r[1]) for r in rows if not r[0].startswith("#")]
    assert len(errs) == 50 and max(errs) <= 1e-5


def test_verify_exit_code_follows_tolerance(image, tmp_path, monkeypatch):
    args = ["--graph", "grid=8x8", "--input", str(image), "--lambda2", "0.2", "--mode", "verify", "--output", str(tmp_path / "v.csv")]
    monkeypatch.setenv("FLSA_TOL", "1e-30")
    assert main(args) == 6
    monkeypatch.setenv("FLSA_TOL", "1")
    assert main(args) == 0


def test_path_dump_round_trip_chain(signal, tmp_path):
    dump, sol = tmp_path / "tree.csv", tmp_path / "sol.csv"
    lams = "0:4:33"
    assert main(["--graph", "chain", "--input", str(signal), "--mode", "path-dump", "--output", str(dump)]) == 0
    assert main(["--graph", "chain", "--input", str(signal), "--lambda2", lams, "--output", str(sol)]) == 0
    header, rows = read_table(dump)
    assert header == ["lambda", "child_left", "child_right", "beta_at_creation", "slope"]
    y = np.loadtxt(signal)
    tree = tree_from_rows(y, [(float(a), int(b), int(c), float(d), float(e)) for a, b, c, d, e in rows])
    for lam, beta in read_solutions_csv(sol).items():
        assert np.array_equal(eval_path(tree, lam), beta)


def test_path_dump_round_trip_grid(image, tmp_path):
    log, anchors, sol = tmp_path / "log.csv", tmp_path / "anchors.csv", tmp_path / "sol.csv"
    base = ["--graph", "grid=8x8", "--input", str(image)]
    assert main(base + ["--mode", "path-dump", "--output", str(log), "--anchors", str(anchors)]) == 0
    assert main(base + ["--lambda2", "0:0.5:50", "--output", str(sol)]) == 0
    header, rows = read_table(log)
    assert header == ["lambda", "kind", "set_a", "set_b"]
    _, arows = read_table(anchors)
    y = np.loadtxt(image, delimiter=",").ravel()
    store = store_from_anchors(y, grid_graph(8, 8), arows)
    for lam, beta in read_solutions_csv(sol).items():
        assert np.array_equal(eval_general(store, lam), beta)


def test_edge_list_graph(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("4 4\n0 1\n1 2\n2 3\n0 3\n")
    y = tmp_path / "y.txt"
    y.write_text("0\n1\n0\n1\n")
    out = tmp_path / "o.csv"
    assert main(["--graph", f"edgelist={g}", "--input", str(y), "--lambda2", "10", "--output", str(out)]) == 0
    np.testing.assert_allclose(read_solutions_csv(out)[10.0], 0.5)


def test_cap_option(image, tmp_path):
    out = tmp_path / "o.csv"
    assert main(["--graph", "grid=8x8", "--input", str(image), "--cap", "1", "--lambda2", "0.3", "--output", str(out)]) == 0


def test_bench(signal, capsys):
    assert main(["--graph", "chain", "--input", str(signal), "--mode", "bench"]) == 0
    text = capsys.readouterr().out
    for phase in ("load", "solve", "evaluate"):
        assert phase in text


@pytest.mark.parametrize(
    "content, extra, code",
    [
        ("1\nx\n", [], 3),
        ("1\n2\n", ["--lambda2", "-1"], 5),
        ("1\n2\n", ["--lambda2", "0:1:0"], 5),
        ("1\n2\n", ["--lambda1", "-1"], 5),
        ("1\n2\n", ["--cap", "0"], 5),
    ],
)
def test_error_exit_codes(tmp_path, content, extra, code, capsys):
    path = tmp_path / "y.txt"
    path.write_text(content)
    assert main(["--graph", "chain", "--input", str(path)] + extra) == code
    assert "flsapath:" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    path = tmp_path / "img.csv"
    path.write_text("1,2\n3,4\n5\n")
    assert main(["--graph", "grid=3x2", "--input", str(path)]) == 3
    assert ":3:" in capsys.readouterr().err


def test_missing_file_and_bad_graph(tmp_path):
    assert main(["--graph", "chain", "--input", str(tmp_path / "nope.txt")]) == 4
    assert main(["--graph", "torus", "--input", "x"]) == 5
    assert main(["--graph", "grid=2x2", "--input", str(tmp_path / "nope.csv")]) == 4
    assert main(["--graph", "grid=2x3", "--mode", "simulate"]) == 5


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["--mode", "solve"])
    assert info.value.code == 2


def test_module_entry_point(signal):
    proc = subprocess.run(
        [sys.executable, "-m", "flsapath", "--graph", "chain", "--input", str(signal), "--lambda2", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "lambda,node,beta"
