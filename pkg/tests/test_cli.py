import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from posfilter import fileio
from posfilter.cli import main

FAST = ["--tol-f", "1e-5", "--tol-x", "1e-5"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_norm(capsys):
    code, out, _ = run(["norm", "lls10", "filter_best"], capsys)
    assert code == 0 and abs(float(out) - 0.0447) <= 5e-4
    code, out, _ = run(["norm", "lls10", "filter_lls10", "--tol", "1e-4"], capsys)
    assert out.strip() == "0.1418"


def test_norm_python_backend(capsys):
    code, out, _ = run(["--backend", "python", "norm", "lls10", "filter_best"], capsys)
    assert code == 0 and abs(float(out) - 0.0447) <= 5e-4


@pytest.mark.parametrize("payload, field", [
    ('{"A": [[0.1]], "B": [[1]], "C": [[1]], "D": [[0]], "L": [[1]]}', "G"),
    ('{"A": [[0.1, 0.2]], "B": [[1]], "C": [[1]], "D": [[0]], "L": [[1]], "G": [[0]]}', "A"),
    ('{"A": [[2.0]], "B": [[1]], "C": [[1]], "D": [[0]], "L": [[1]], "G": [[0]]}', "A"),
    ('{"A": [["x"]], "B": [[1]], "C": [[1]], "D": [[0]], "L": [[1]], "G": [[0]]}', "A"),
    ('{"A": [[0.1]], "B": [[1], [1, 2]], "C": [[1]], "D": [[0]], "L": [[1]], "G": [[0]]}', "B"),
])
def test_bad_problem_names_field(tmp_path, capsys, payload, field):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    code, _, err = run(["norm", str(path), "filter_best"], capsys)
    assert code == 2
    assert f"field '{field}'" in err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"A": [[0.1]],\n "B": ')
    code, _, err = run(["norm", str(path), "filter_best"], capsys)
    assert code == 2 and "line 2" in err


def test_filter_shape_mismatch(tmp_path, capsys):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"Ahat": [[0.1]], "Bhat": [[1, 1, 1]], "Chat": [[1]], "Dhat": [[1, 1, 1]]}))
    code, _, err = run(["norm", "lls10", str(path)], capsys)
    assert code == 2 and "Dhat" in err


def test_design_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["design", "lls10", "--seed", "7", "--starts", "1", "--method", "nm"] + FAST
    assert run(base + ["--out", str(a)], capsys)[0] == 0
    assert run(base + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 7 and doc["method"] == "nm" and doc["objective"] > 0
    filt = fileio.load_filter(a)
    assert filt.is_feasible()
    code, out, _ = run(["norm", "lls10", str(a)], capsys)
    assert abs(float(out) - doc["objective"]) <= 1e-6


def test_design_order_zero(capsys):
    code, out, _ = run(["design", "lls10", "--order", "0", "--starts", "1"] + FAST, capsys)
    doc = json.loads(out)
    assert code == 0 and doc["Ahat"] == [] and len(doc["Dhat"][0]) == 2


def test_bad_counts(capsys):
    assert run(["design", "lls10", "--starts", "0"], capsys)[0] == 2
    assert run(["design", "lls10", "--order", "-1"], capsys)[0] == 2


def test_benchmark_csv(tmp_path, capsys):
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    argv = ["benchmark", "lls10", "--starts", "1", "--seed", "3", "--max-evals", "200"] + FAST
    assert run(argv + ["--csv", str(out1), "--json", str(tmp_path / "r.json")], capsys)[0] == 0
    assert run(argv + ["--csv", str(out2)], capsys)[0] == 0
    rows1 = list(csv.DictReader(out1.open()))
    rows2 = list(csv.DictReader(out2.open()))
    assert [r["method"] for r in rows1] == ["nm", "nm-restart", "mds"]
    for r1, r2 in zip(rows1, rows2):
        assert float(r1["rate@0.1415"]) in (0.0, 1.0) and float(r1["rate@0.0448"]) in (0.0, 1.0)
        del r1["mean_time_s"], r2["mean_time_s"]
        assert r1 == r2
    meta = json.loads((tmp_path / "r.json").read_text())
    assert len(meta["reports"]) == 3 and meta["meta"]["seed"] == 3


def test_simulate(tmp_path, capsys):
    code, out, _ = run(["simulate", "lls10", "filter_best", "--horizon", "25",
                        "--xi0", "0.03,0.08,0.10,0.05"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["k", "z", "zhat", "e"] and len(rows) == 26
    for k, z, zh, e in rows[1:]:
        assert float(z) - float(zh) == pytest.approx(float(e), abs=1e-15)


def test_simulate_zero_input(capsys):
    code, out, _ = run(["simulate", "lls10", "filter_best", "--zero-input", "--horizon", "10"], capsys)
    errors = [float(r["e"]) for r in csv.DictReader(io.StringIO(out))]
    assert code == 0 and errors == [0.0] * 10


def test_simulate_w_file(tmp_path, capsys):
    w = tmp_path / "w.csv"
    w.write_text("w1,w2\n" + "\n".join("1,0" for _ in range(5)))
    code, out, _ = run(["simulate", "lls10", "filter_best", "--w-file", str(w), "--horizon", "5"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 6
    assert run(["simulate", "lls10", "filter_best", "--w-file", str(w), "--horizon", "9"], capsys)[0] == 2


def test_simulate_bad_xi0(capsys):
    assert run(["simulate", "lls10", "filter_best", "--xi0", "1,2"], capsys)[0] == 2


def test_filter_roundtrip(tmp_path, best_filter):
    path = tmp_path / "f.json"
    fileio.write_filter(path, best_filter, 0.0447)
    assert fileio.load_filter(path) == best_filter


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "posfilter", "norm", "lls10", "filter_lls10"],
                          capture_output=True, text=True, check=True)
    assert np.isclose(float(proc.stdout), 0.1417694, atol=1e-6)
