import csv
import json

import numpy as np
import pytest

from volinv.cli import main

REF = "0,0.5,-0.1,0.3"


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out-dir", str(out)])
    return code, out


def read_manifest(out):
    rows = [ln.split("  ") for ln in (out / "MANIFEST").read_text().splitlines()]
    return {name: digest for digest, name in rows}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sim")
    code, out = run(tmp, "a", "simulate", "--theta", REF, "--n", "1500", "--seed", "3")
    assert code == 0
    return out


def test_simulate_outputs(sim_dir):
    lines = (sim_dir / "path.csv").read_text().splitlines()
    assert lines[0] == "t,x,sigma2"
    assert len(lines) == 1501
    cfg = json.loads((sim_dir / "config.json").read_text())
    assert cfg["command"] == "simulate"
    for key in ("model", "theta", "dist", "n", "seed", "burn_in"):
        assert key in cfg
    assert set(read_manifest(sim_dir)) == {"config.json", "path.csv"}


def test_rerun_from_config_is_byte_identical(sim_dir, tmp_path):
    code, out = run(tmp_path, "b", "simulate", "--config", str(sim_dir / "config.json"))
    assert code == 0
    assert (out / "path.csv").read_bytes() == (sim_dir / "path.csv").read_bytes()
    assert read_manifest(out) == read_manifest(sim_dir)


def test_flags_override_config(sim_dir, tmp_path):
    code, out = run(tmp_path, "c", "simulate", "--config", str(sim_dir / "config.json"), "--n", "200")
    assert code == 0
    assert json.loads((out / "config.json").read_text())["n"] == 200


def test_fit_outputs_and_rerun(sim_dir, tmp_path):
    argv = ["fit", "--input", str(sim_dir / "path.csv"), "--starts", "3", "--seed", "1"]
    code, out = run(tmp_path, "fit", *argv)
    assert code == 0
    res = json.loads((out / "fit.json").read_text())
    assert set(res["theta_hat"]) == {"alpha", "beta", "gamma", "delta"}
    assert res["n"] == 1500 and res["seed"] == 1
    assert res["converged"] and res["constraint"] < 0
    traj = (out / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,g,sigma2_hat" and len(traj) == 1501
    assert json.loads((out / "forecast.json").read_text())["next_variance"] > 0
    cfg = json.loads((out / "config.json").read_text())
    assert len(cfg["input_sha256"]) == 64 and cfg["box"]["beta"] == [0.0, 0.999]

    code, again = run(tmp_path, "fit2", "fit", "--config", str(out / "config.json"))
    assert code == 0
    assert read_manifest(again) == read_manifest(out)


def _write_series(path, xs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x"])
        for i, x in enumerate(xs, 1):
            w.writerow([i, x])


def test_fit_constant_series_collapsed_box(tmp_path):
    c = 0.8
    f = tmp_path / "const.csv"
    _write_series(f, [c] * 300)
    code, out = run(tmp_path, "const", "fit", "--model", "garch11", "--input", str(f),
                    "--box", "0.01:4,0:0,0:0", "--starts", "2")
    assert code == 0
    th = json.loads((out / "fit.json").read_text())["theta_hat"]
    assert th["beta"] == 0 and th["gamma"] == 0
    assert th["alpha"] == pytest.approx(c * c, abs=1e-5)


def test_fit_malformed_row_names_line(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("t,x\n1,0.5\n2,abc\n3,0.1\n")
    code, _ = run(tmp_path, "bad", "fit", "--input", str(f))
    assert code == 1
    assert "line(s) 3" in capsys.readouterr().err


def test_fit_missing_input_is_usage_error(tmp_path):
    code, _ = run(tmp_path, "missing", "fit", "--input", str(tmp_path / "nope.csv"))
    assert code == 1


def test_fit_infeasible_exit_code(sim_dir, tmp_path):
    code, out = run(tmp_path, "inf", "fit", "--input", str(sim_dir / "path.csv"),
                    "--box=-5:-4,0.9:0.95,0:0,4:5", "--starts", "2")
    assert code == 2
    assert "no feasible point" in json.loads((out / "fit.json").read_text())["error"]
    assert (out / "MANIFEST").exists()


def test_diagnose_pass_and_fail(sim_dir, tmp_path):
    code, out = run(tmp_path, "ok", "diagnose", "--theta", REF, "--m", "20000", "--trunc", "100",
                    "--input", str(sim_dir / "path.csv"))
    assert code == 0
    d = json.loads((out / "diagnose.json").read_text())
    assert d["passed"] and d["model_implied"]["value"] < 0 and d["empirical"]["value"] < 0
    assert d["mm_prime"]["ok"]

    code, out = run(tmp_path, "bad", "diagnose", "--theta", "0,0.5,0,6", "--m", "20000", "--trunc", "100")
    assert code == 2
    d = json.loads((out / "diagnose.json").read_text())
    assert not d["passed"] and d["model_implied"]["value"] > 0


def test_simulate_non_stationary_exit_code(tmp_path):
    code, _ = run(tmp_path, "ns", "simulate", "--model", "garch11", "--theta", "0.1,0.5,0.8", "--n", "100")
    assert code == 2


def test_study_smoke(tmp_path):
    code, out = run(tmp_path, "study", "study", "--theta", REF, "--n", "800", "--reps", "2",
                    "--starts", "2", "--workers", "1", "--m", "5000", "--trunc", "100", "--seed", "5")
    assert code == 0
    lines = (out / "study.csv").read_text().splitlines()
    assert lines[0] == "rep,alpha,beta,gamma,delta,qlik,converged"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0", "1"]
    s = json.loads((out / "summary.json").read_text())
    assert s["reps"] == 2 and s["n_failed"] == 0
    assert set(read_manifest(out)) == {"config.json", "diagnose.json", "study.csv", "summary.json",
                                       "asymptotics.json"}


def test_study_rejects_non_invertible_theta(tmp_path):
    code, out = run(tmp_path, "bad", "study", "--theta", "0,0.5,0,6", "--n", "200", "--reps", "2")
    assert code == 2
    assert not (out / "study.csv").exists()


def test_scan(tmp_path):
    code, out = run(tmp_path, "scan", "scan", "--box", "0:0,0.5:0.5,0:0,0:4", "--grid", "1,1,1,5",
                    "--m", "5000", "--trunc", "60")
    assert code == 0
    lines = (out / "scan.csv").read_text().splitlines()
    assert lines[0] == "alpha,beta,gamma,delta,value,se"
    values = [float(ln.split(",")[4]) for ln in lines[1:]]
    assert len(values) == 5 and values[0] < 0 < values[-1]


def test_profile(sim_dir, tmp_path):
    code, out = run(tmp_path, "prof", "profile", "--input", str(sim_dir / "path.csv"), "--theta", REF,
                    "--axis", "beta", "--grid", "0.3:0.7:5")
    assert code == 0
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[0] == "beta,qlik,constraint" and len(lines) == 6
    vals = np.array([float(ln.split(",")[0]) for ln in lines[1:]])
    np.testing.assert_allclose(vals, np.linspace(0.3, 0.7, 5))


def test_asymptotics(tmp_path):
    code, out = run(tmp_path, "asy", "asymptotics", "--theta", REF, "--n", "4000", "--m", "20000",
                    "--trunc", "200")
    assert code == 0
    rep = json.loads((out / "asymptotics.json").read_text())
    V, B = np.array(rep["V"]), np.array(rep["B"])
    np.testing.assert_allclose(V @ B, 2 * np.eye(4), atol=1e-8)
    assert (out / "asymptotics.csv").read_text().startswith("param,theta0,")


def test_asymptotics_moment_failure(tmp_path):
    code, out = run(tmp_path, "asy", "asymptotics", "--theta", "0,0.5,0,6", "--m", "2000", "--trunc", "50")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["simulate", "--theta", "0,0.5,-0.1"],
        ["simulate", "--theta", "0,0.5,0.4,0.1"],
        ["simulate", "--n", "notanint", "--theta", REF],
        ["fit"],
        ["profile", "--input", "x.csv", "--theta", REF, "--grid", "1:2"],
    ],
)
def test_usage_errors(tmp_path, argv):
    with pytest.raises(SystemExit) as err:
        code = main([*argv, "--out-dir", str(tmp_path / "u")])
        raise SystemExit(code)
    assert err.value.code == 1


def test_unknown_config_key(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"theta": REF, "nsteps": 10}))
    code, _ = run(tmp_path, "u", "simulate", "--config", str(f))
    assert code == 1
