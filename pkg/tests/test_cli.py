import io
import json
import subprocess
import sys

import numpy as np
import pytest

from jetpot import operators
from jetpot.cli import (EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, UsageError,
                        default_seed, dispatch, parse_jet, parse_matrix, parse_params)
from jetpot.report import VerificationReport


def run(*argv):
    out = io.StringIO()
    code = dispatch(list(argv), stdout=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text) if text else None


def test_parse_matrix_forms():
    assert np.array_equal(parse_matrix("I", 3), np.eye(3))
    assert np.array_equal(parse_matrix("2.5*I", 2), 2.5 * np.eye(2))
    assert np.array_equal(parse_matrix("diag(1,-3)"), np.diag([1.0, -3.0]))
    assert np.array_equal(parse_matrix("[[1,2],[2,1]]"), np.array([[1.0, 2.0], [2.0, 1.0]]))
    for bad in ("[[1,2,3]]", "diag(a)", "nonsense"):
        with pytest.raises(UsageError):
            parse_matrix(bad, 2)
    with pytest.raises(UsageError):
        parse_matrix("I")


def test_parse_jet_forms():
    J = parse_jet("-1,[1,0],I")
    assert J.r == -1.0 and np.array_equal(J.p, [1, 0]) and np.array_equal(J.A, np.eye(2))
    K = parse_jet(json.dumps(J.to_dict()))
    assert K.allclose(J, atol=0)
    assert np.array_equal(parse_jet("0,0,diag(2,3)").p, [0, 0])
    with pytest.raises(UsageError):
        parse_jet("1,2")
    with pytest.raises(UsageError):
        parse_jet("{not json")


def test_parse_params():
    assert parse_params(["--R", "2", "k=3", "--name=det"]) == {"R": 2, "k": 3, "name": "det"}


def test_examples():
    code, out = run_json("garding", "eigs", "--poly", "det", "--A", "diag(1,-3)")
    assert code == EXIT_OK and np.allclose(out["eigenvalues"], [-3, 1])
    code, out = run_json("canonical", "--set", "Pk", "--k", "2", "--jet", "0,0,diag(-3,1,5)")
    assert code == EXIT_OK and np.isclose(out["value"], -2.0) and np.isclose(out["closed_form"], -2.0)
    code, out = run_json("ops", "eval", "special_lagrangian", "--jet", "0,0,I")
    assert code == EXIT_OK and np.isclose(out["value"], np.pi / 2)
    code, out = run_json("cone", "R", "--jet", "0,[0,2],-1*I")
    assert code == EXIT_OK and out["dual_margin"] >= 0 and not out["member"]


def test_lists():
    code, out = run_json("ops", "list")
    assert code == EXIT_OK and "det_MA" in [o["name"] for o in out["operators"]]
    code, out = run_json("scenario", "list")
    assert code == EXIT_OK and len(out["scenarios"]) == 7


def test_usage_errors_exit_2(capsys):
    assert run("bogus")[0] == EXIT_USAGE
    assert run("ops", "eval", "det_MA", "--jet", "0,0,diag(-1,2)")[0] == EXIT_USAGE
    assert run("scenario", "comparison-fkr", "--Rprime", "0.5")[0] == EXIT_USAGE
    assert run("garding", "eigs", "--poly", "det", "--A", "I")[0] == EXIT_USAGE
    assert run("ops", "list", "--format", "csv")[0] == EXIT_USAGE
    err = capsys.readouterr().err
    assert '"error": "ConstraintViolation"' in err


def test_expected_failure_scenario_exits_0_and_unreproduced_exits_1():
    code, out = run_json("scenario", "zmp-failure")
    assert code == EXIT_OK and out["details"]["reproduced"]
    code, out = run_json("scenario", "zmp-failure", "--Rprime", "0.5")
    assert code == EXIT_FAIL and not out["details"]["reproduced"]


def test_inconclusive_exits_3(monkeypatch):
    def starved(spec, samples, seed):
        return VerificationReport(False, 0, float("nan"), None, seed, inconclusive=True)

    monkeypatch.setattr(operators, "operator_checks", starved)
    assert run("check", "--op", "lambda_min")[0] == EXIT_INCONCLUSIVE


def test_check_exit_codes():
    assert run("check", "--op", "lambda_min", "--samples", "200")[0] == EXIT_OK
    assert run("check")[0] == EXIT_USAGE


def test_seed_from_environment(monkeypatch):
    monkeypatch.delenv("JETPOT_SEED", raising=False)
    assert default_seed() == 42
    monkeypatch.setenv("JETPOT_SEED", "7")
    assert default_seed() == 7
    _, out = run_json("check", "--op", "lambda_min", "--samples", "100")
    assert out["seed"] == 7
    _, out = run_json("check", "--op", "lambda_min", "--samples", "100", "--seed", "3")
    assert out["seed"] == 3
    monkeypatch.setenv("JETPOT_SEED", "seven")
    assert run("ops", "list")[0] == EXIT_USAGE


def test_determinism():
    a = run("ops", "check", "sigma_k", "--n", "3", "--samples", "300", "--seed", "5")
    b = run("ops", "check", "sigma_k", "--n", "3", "--samples", "300", "--seed", "5")
    assert a == b


def test_csv_and_output_file(tmp_path):
    code, text = run("scenario", "comparison-convex", "--format", "csv")
    assert code == EXIT_OK and text.splitlines()[0] == "x0,x1,margin,verdict"
    target = tmp_path / "out.json"
    code, text = run("garding", "value", "--poly", "det", "--A", "diag(2,3)", "--output", str(target))
    assert code == EXIT_OK and text == ""
    assert np.isclose(json.loads(target.read_text())["value"], 6.0)


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "params": {"samples": 40}}))
    code, out = run_json("scenario", "subaffine-plus", "--config", str(cfg))
    assert code == EXIT_OK and out["seed"] == 11
    code, out = run_json("scenario", "subaffine-plus", "--config", str(cfg), "--seed", "12")
    assert out["seed"] == 12
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run("ops", "list", "--config", str(cfg))[0] == EXIT_USAGE


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jetpot.cli", "garding", "margin", "--poly", "det",
                           "--A", "diag(1,2)", "--k", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and np.isclose(json.loads(proc.stdout)["margin"], 1.0)
