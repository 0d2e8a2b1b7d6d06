import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from llgselfsim import __version__
from llgselfsim.cli import (
    EXIT_NOROOT,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    PROFILE_COLUMNS,
    format_number,
    main,
    read_config_file,
)

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "output.schema.json").read_text())


def run(argv, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, (out.read_bytes() if out.exists() else b"")


def rows_of(data: bytes):
    lines = data.decode("utf-8").split("\n")
    assert lines[-1] == ""
    return lines[0].split(","), [ln.split(",") for ln in lines[1:-1]]


def test_profile_example(tmp_path):
    code, data = run(["profile", "--c0", "0.8", "--alpha", "0.2", "--s-max", "20", "--ds", "0.05"], tmp_path)
    assert code == EXIT_OK
    header, rows = rows_of(data)
    assert ",".join(header) == "s,m1,m2,m3,n1,n2,n3,b1,b2,b3,c,tau"
    assert tuple(header) == PROFILE_COLUMNS
    assert len(rows) == 801
    s = np.array([float(r[0]) for r in rows])
    assert s[0] == -20.0 and s[400] == 0.0 and s[-1] == 20.0
    assert b"\r" not in data


def test_profile_constant_and_alpha1(tmp_path):
    _, data = run(["profile", "--c0", "0", "--s-max", "2"], tmp_path)
    _, rows = rows_of(data)
    assert all(r[1:4] == ["1", "0", "0"] for r in rows)
    _, data = run(["profile", "--c0", "0.8", "--alpha", "1", "--s-max", "8"], tmp_path)
    _, rows = rows_of(data)
    assert all(float(r[3]) == 0.0 for r in rows)


def test_limit_and_json_schema(tmp_path):
    code, data = run(["limit", "--format", "json"], tmp_path, "out.json")
    assert code == EXIT_OK
    doc = json.loads(data)
    jsonschema.validate(doc, SCHEMA)
    assert doc["meta"]["version"] == __version__
    assert doc["meta"]["params"]["c0"] == 0.8 and doc["meta"]["params"]["alpha"] == 0.4
    row = doc["rows"][0]
    A = np.array([row["A1"], row["A2"], row["A3"]])
    assert np.linalg.norm(A) == pytest.approx(1.0, abs=1e-8)


def test_sweep_json_with_errors_validates(tmp_path):
    argv = ["sweep", "--alpha", "0.4", "--c0-min", "0.5", "--c0-max", "1", "--steps", "2",
            "--abs-tol", "1e-4", "--rel-tol", "1e-4", "--frame-drift-tol", "1e-3", "--format", "json"]
    code, data = run(argv, tmp_path, "out.json")
    assert code == EXIT_NUMERIC
    doc = json.loads(data)
    jsonschema.validate(doc, SCHEMA)
    assert all(r["theta"] is None and r["error"].startswith("EnergyDrift") for r in doc["rows"])


def test_sweep_alpha0_and_alpha1(tmp_path):
    code, data = run(["sweep", "--alpha", "0", "--c0-min", "0.1", "--c0-max", "3", "--steps", "30"], tmp_path)
    assert code == EXIT_OK
    header, rows = rows_of(data)
    assert header == ["c0", "alpha", "A1", "A2", "A3", "theta", "method", "error"]
    theta = np.array([float(r[5]) for r in rows])
    assert len(rows) == 30 and np.all(np.diff(theta) < 0)
    code, data = run(["sweep", "--alpha-grid", "1", "--c0-min", "0.1", "--c0-max", "3", "--steps", "10"], tmp_path)
    _, rows = rows_of(data)
    assert code == EXIT_OK and all(float(r[4]) == 0.0 for r in rows)


def test_angle_commands(tmp_path):
    code, data = run(["angle", "--alpha", "0", "--theta", "1.0"], tmp_path)
    _, rows = rows_of(data)
    assert code == EXIT_OK and len(rows) == 1
    assert float(rows[0][0]) == pytest.approx(math.sqrt(-2 * math.log(math.sin(0.5)) / math.pi), abs=1e-12)
    code, data = run(["angle", "--alpha", "1", "--theta", "3.14159", "--c0-max", "6"], tmp_path)
    _, rows = rows_of(data)
    c0 = np.array([float(r[0]) for r in rows])
    k = np.rint(c0 / math.sqrt(math.pi))
    np.testing.assert_allclose(c0, k * math.sqrt(math.pi), atol=1e-5)
    assert code == EXIT_NOROOT or code == EXIT_OK
    assert main(["angle", "--alpha", "0", "--theta", "1.0", "--c0-max", "0.1"]) == EXIT_NOROOT


def test_selfsim_and_filament(tmp_path, capsys):
    code, data = run(["selfsim", "--t", "0.5,1", "--s-max", "1", "--ds", "0.5"], tmp_path)
    header, rows = rows_of(data)
    assert code == EXIT_OK and header == ["s", "t", "m1", "m2", "m3"] and len(rows) == 10
    zero = [r for r in rows if float(r[0]) == 0.0]
    assert all(r[2:] == ["1", "0", "0"] for r in zero)
    code, data = run(["filament", "--t", "1", "--s-max", "1", "--ds", "1"], tmp_path)
    _, rows = rows_of(data)
    mid = [r for r in rows if float(r[0]) == 0.0][0]
    assert float(mid[2]) == 0.8 and float(mid[3]) == 0.0


@pytest.mark.parametrize(
    "argv",
    [
        ["profile", "--alpha", "1.5"],
        ["profile", "--c0", "-1"],
        ["profile", "--ds", "0"],
        ["profile", "--bogus"],
        ["angle", "--theta", "4"],
        ["verify", "--suite", "nope"],
        ["profile", "--abs-tol", "1e-5"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_verify_pass_and_fail(tmp_path):
    code, data = run(["verify", "--suite", "symmetry"], tmp_path)
    header, rows = rows_of(data)
    assert code == EXIT_OK and header[-1] == "status" and all(r[-1] == "PASS" for r in rows)
    code, data = run(["verify", "--suite", "frames", "--abs-tol", "1e-8", "--rel-tol", "1e-8",
                      "--frame-drift-tol", "1e-3"], tmp_path)
    _, rows = rows_of(data)
    assert code == EXIT_VERIFY and any(r[-1] == "FAIL" for r in rows)


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nc0 = 0.5\nalpha=1\nforce_integrate = false\n")
    assert read_config_file(str(cfg)) == {"c0": "0.5", "alpha": "1", "force-integrate": "false"}
    cfg.write_text("c0 = 0.5\nalpha = 1\n")
    _, data = run(["limit", "--config", str(cfg)], tmp_path)
    _, rows = rows_of(data)
    assert float(rows[0][0]) == 0.5 and float(rows[0][1]) == 1.0
    _, data = run(["limit", "--config", str(cfg), "--c0", "0.25"], tmp_path)
    _, rows = rows_of(data)
    assert float(rows[0][0]) == 0.25
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["limit", "--config", str(bad)]) == EXIT_USAGE
    assert main(["limit", "--config", str(tmp_path / "missing.cfg")]) == EXIT_USAGE


def test_format_number():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(-0.0) == "0"
    assert format_number(float("nan")) == "nan"
    for x in (math.pi, 1e-300, -2.5e17, 1 / 3):
        assert float(format_number(x)) == x


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_byte_identical_runs(tmp_path, fmt):
    argv = ["profile", "--s-max", "4", "--ds", "0.1", "--format", fmt]
    _, a = run(argv, tmp_path, "a")
    _, b = run(argv, tmp_path, "b")
    assert a == b and len(a) > 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "lim.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "llgselfsim", "limit", "--c0", "0", "--out", str(out)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("c0,alpha,A1,A2,A3,Am1,Am2,Am3,theta,method\n")
