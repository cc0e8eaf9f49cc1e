import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from speclocalizer import cli
from speclocalizer import hermitian as hc
from speclocalizer import localizer as lc
from speclocalizer.matrix_io import dump_matrix


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- torus ------------------------------------------------------------------------------


def test_torus_csv(capsys):
    code, out, _ = run(capsys, "torus", "--m", "1", "--rho", "2", "--kappa", "1")
    assert code == 0
    (row,) = parse_csv(out)
    assert row["index"] == "1" and row["signature"] == "2" and row["lattice_size"] == "13"
    assert out.splitlines()[0] == ",".join(lc.CSV_COLUMNS)


def test_torus_matches_library_bit_for_bit(capsys):
    _, out, _ = run(capsys, "torus", "--m", "1", "--rho", "2", "--kappa", "1")
    (row,) = parse_csv(out)
    lib = lc.torus_row(1, 2.0, 1.0)
    for key in ("gap", "delta", "comm_norm", "kappa0", "min_abs_eig"):
        assert float(row[key]) == getattr(lib, key)


def test_torus_json(capsys):
    code, out, _ = run(capsys, "torus", "--m", "2", "--rho", "3", "--kappa", "0.1", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert row["index"] == 2 and row["lattice_size"] == 29


@pytest.mark.parametrize(
    "argv",
    [
        ["torus", "--m", "1", "--rho", "2", "--kappa", "-1"],
        ["torus", "--rho", "-1"],
        ["torus", "--B", "100"],
        ["torus", "--B", "8192"],
        ["torus", "--bogus"],
        ["torus", "--singular-rtol", "0"],
        [],
        ["ktheory"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_singular_exit_code(capsys):
    # a huge relative tolerance makes every localizer count as singular
    code, out, err = run(capsys, "torus", "--singular-rtol", "0.9")
    assert code == 2
    assert "SingularLocalizer" in err
    assert parse_csv(out)[0]["error"].startswith("SingularLocalizer")


def test_torus_dumps(capsys, tmp_path):
    ops, spec = tmp_path / "ops.json", tmp_path / "spec.txt"
    code, _, _ = run(capsys, "torus", "--dump-operators", str(ops), "--dump-spectrum", str(spec))
    assert code == 0
    obj = json.loads(ops.read_text())
    assert obj["x"]["n"] == 26
    values = [float(v) for v in spec.read_text().split()]
    assert len(values) == 52 and values == sorted(values)


def test_torus_b_flag(capsys):
    code, out, _ = run(capsys, "torus", "--B", "64")
    assert code == 0 and parse_csv(out)[0]["index"] == "1"


# -- config precedence ---------------------------------------------------------------------


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 2, "rho": 3, "kappa": 0.1, "format": "json"}))
    code, out, _ = run(capsys, "torus", "--config", str(cfg))
    assert code == 0
    (row,) = json.loads(out)
    assert (row["m"], row["rho"], row["index"]) == (2, 3.0, 2)
    code, out, _ = run(capsys, "torus", "--config", str(cfg), "--m", "-2", "--format", "csv")
    assert parse_csv(out)[0]["index"] == "-2"


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    assert run(capsys, "torus", "--config", str(cfg))[0] == 1
    assert run(capsys, "torus", "--config", str(tmp_path / "missing.json"))[0] == 1


# -- form ------------------------------------------------------------------------------


def test_form_identity(capsys, tmp_path):
    path = tmp_path / "eye.json"
    dump_matrix(np.eye(2), path)
    code, out, _ = run(capsys, "form", str(path), "--format", "json")
    assert code == 0
    assert json.loads(out) == {"n": 2, "gap": 1.0, "signature": 2, "inertia": 0}


def test_form_witt(capsys, tmp_path):
    path = tmp_path / "d.json"
    dump_matrix(np.diag([1.0, -1.0]), path)
    code, out, _ = run(capsys, "form", str(path), "--witt")
    assert code == 0
    assert "signature: 0" in out and "witt_rank: 1" in out


def test_form_matches_library(capsys, tmp_path, rng):
    x = hc.random_form(rng, 5)
    path = tmp_path / "x.json"
    dump_matrix(x.data, path)
    _, out, _ = run(capsys, "form", str(path), "--format", "json", "--witt")
    obj = json.loads(out)
    assert obj["gap"] == x.gap and obj["signature"] == x.signature
    assert obj["witt_rank"] == x.negative_inertia


def test_form_not_hermitian(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "re": [[1, 2], [0, 1]]}))
    code, _, err = run(capsys, "form", str(path))
    assert code == 2 and "NotHermitian" in err


def test_form_degenerate_and_missing(capsys, tmp_path):
    path = tmp_path / "deg.json"
    dump_matrix(np.diag([1.0, 0.0]), path)
    assert run(capsys, "form", str(path))[0] == 2
    assert run(capsys, "form", str(tmp_path / "nope.json"))[0] == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(capsys, "form", str(junk))[0] == 2


# -- sweep -----------------------------------------------------------------------------


def test_sweep_two_rows(capsys, tmp_path):
    params = tmp_path / "params.csv"
    params.write_text("m,rho,kappa\n1,2,1\n2,3,0.1\n")
    out_path = tmp_path / "out.csv"
    code, _, _ = run(capsys, "sweep", str(params), "-o", str(out_path), "--threads", "2")
    assert code == 0
    rows = parse_csv(out_path.read_text())
    assert [r["index"] for r in rows] == ["1", "2"]


def test_sweep_dump_spectrum(capsys, tmp_path):
    params = tmp_path / "params.csv"
    params.write_text("1,2,1\n2,3,0.1\n")
    spec = tmp_path / "spec.txt"
    code, out, _ = run(capsys, "sweep", str(params), "--dump-spectrum", str(spec))
    assert code == 0 and len(parse_csv(out)) == 2
    for i, size in enumerate((52, 116)):
        values = [float(v) for v in (tmp_path / f"spec_row{i}.txt").read_text().split()]
        assert len(values) == size and values == sorted(values)


def test_sweep_error_rows(capsys, tmp_path):
    params = tmp_path / "params.csv"
    params.write_text("m,rho,kappa\n1,2,1\n1,2,-1\n")
    code, out, _ = run(capsys, "sweep", str(params))
    assert code == 0
    rows = parse_csv(out)
    assert rows[0]["error"] == "" and rows[1]["error"]
    params.write_text("1,2,-1\n")
    assert run(capsys, "sweep", str(params))[0] == 2


def test_sweep_bad_input(capsys, tmp_path):
    params = tmp_path / "params.csv"
    params.write_text("1,2\n")
    assert run(capsys, "sweep", str(params))[0] == 1
    assert run(capsys, "sweep", str(tmp_path / "missing.csv"))[0] == 1


def test_sweep_threads_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("LOCALIZER_THREADS", "2")
    params = tmp_path / "params.csv"
    params.write_text("-1,2,0.5\n1,2,0.5\n")
    code, out, _ = run(capsys, "sweep", str(params), "--format", "json")
    assert code == 0 and [r["index"] for r in json.loads(out)] == [-1, 1]


# -- ktheory / selftest ------------------------------------------------------------------


def test_ktheory_classify(capsys, tmp_path):
    x = np.zeros((3, 3))
    x[:2, :2] = np.diag([3.0, -1.0])
    x[2, 2] = -2.0
    path = tmp_path / "x.json"
    dump_matrix(x, path)
    code, out, _ = run(capsys, "ktheory", "classify", str(path), "--blocks", "2,1")
    assert code == 0
    assert json.loads(out) == {"blocks": [2, 1], "n": 1, "inertia": [1, 1]}


def test_ktheory_classify_errors(capsys, tmp_path):
    path = tmp_path / "x.json"
    dump_matrix(np.array([[1.0, 0.5], [0.5, -1.0]]), path)
    assert run(capsys, "ktheory", "classify", str(path), "--blocks", "1,1")[0] == 2
    assert run(capsys, "ktheory", "classify", str(path), "--blocks", "a")[0] == 1
    assert run(capsys, "ktheory", "classify", str(path), "--blocks", "0")[0] == 1


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--format", "json")
    assert code == 0
    checks = json.loads(out)
    assert checks and all(c["passed"] for c in checks)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "speclocalizer", "torus", "--m", "1", "--rho", "2", "--kappa", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert parse_csv(proc.stdout)[0]["index"] == "1"
