import json
import subprocess
import sys
from pathlib import Path

import pytest

from difinv.cli import EXIT_INVALID, EXIT_MATH, EXIT_OK, EXIT_USAGE, main, problem_from_dict

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def test_check_example1(capsys):
    code, rep = run_json(capsys, "check", SPECS / "example1.json")
    assert code == EXIT_OK and rep["ok"]


def test_check_not_invariant_exits_2(capsys):
    code, rep = run_json(capsys, "check", SPECS / "not_invariant.json")
    assert code == EXIT_MATH and not rep["ok"]
    (row,) = rep["invariants"]
    assert not row["invariant"] and set(row["witness"]) == {"x", "u"}


def test_missing_file_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "check", tmp_path / "nope.json")
    assert code == EXIT_INVALID and "invalid problem" in err


def test_malformed_spec_exits_1(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 1, "m": 1, "xi": ["u"], "eta": ["-x", "x"]}))
    assert run(capsys, "check", bad)[0] == EXIT_INVALID


@pytest.mark.parametrize("argv", [["bogus"], ["prolong", "x.json", "--order", "-1"], ["examples", "run", "9"]])
def test_usage_errors_exit_64(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


def test_examples_run_1_shows_reduced_invariant(capsys):
    code, out, _ = run(capsys, "examples", "run", "1")
    assert code == EXIT_OK
    assert "reduced invariant" in out and "passed: yes" in out


def test_examples_run_all(capsys):
    code, rep = run_json(capsys, "examples", "run", "all")
    assert code == EXIT_OK and rep["passed"]
    assert len(rep["examples"]) == 6


def test_riccati_verify_example3(capsys):
    code, rep = run_json(capsys, "riccati", "verify", SPECS / "example3_k2.json")
    assert code == EXIT_OK
    assert rep["degree"] == 2 and rep["unknowns"] == ["u1[1]"]
    assert rep["particular"]["u1[1]"] == "2*C*z"
    assert rep["verify"]["general"]["passed"] and rep["verify"]["particular"]["passed"]


def test_riccati_build_example5(capsys):
    code, rep = run_json(capsys, "riccati", "build", SPECS / "example5.json")
    assert code == EXIT_OK and set(rep["equations"]) == {"u1[1]", "u2[1]"}


def test_prolong_rotation(capsys):
    code, rep = run_json(capsys, "prolong", SPECS / "example1.json", "--order", "1")
    assert code == EXIT_OK
    assert rep["coefficients"]["u1[1]"] == "-1 - u1[1]^2"


@pytest.mark.parametrize("name", ["example1.json", "example2.json", "example3_km1.json"])
def test_invariants_and_first_order(capsys, name):
    for cmd in ("invariants", "first-order", "reconstruct", "quadrature"):
        code, _ = run_json(capsys, cmd, SPECS / name)
        assert code == EXIT_OK, cmd


def test_quadrature_by_flow(capsys):
    code, rep = run_json(capsys, "quadrature", SPECS / "example1_flow.json")
    assert code == EXIT_OK and rep["table"]


def test_json_output_is_deterministic():
    argv = [sys.executable, "-m", "difinv", "riccati", "verify", str(SPECS / "example3_k2.json"),
            "--format", "json", "--seed", "7"]
    a, b = (subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2))
    assert a == b


def test_domain_override(capsys):
    code, rep = run_json(capsys, "check", SPECS / "example1.json", "--domain", "x=0.2:0.4")
    assert code == EXIT_OK


def test_problem_from_dict_defaults():
    f = problem_from_dict({"n": 1, "m": 1, "xi": ["1"], "eta": ["0"], "invariants": ["u"], "J": "x"})
    assert f.js.n == f.js.m == 1 and f.J is not None
