"""Command-line entry point: ``volinv <command> [flags]``.

Each run writes one directory holding ``config.json`` (the fully resolved
configuration), the command's outputs and a ``MANIFEST`` of SHA-256 hashes.
Values come from command defaults, then a JSON file given by ``--config``,
then explicit flags. Rerunning with the echoed ``config.json`` reproduces the
outputs byte for byte.

Exit codes: 0 success, 2 infeasible or failed diagnostic, 1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path as FsPath

import numpy as np

from . import asymptotics as asy
from .estimate import FitOptions, InfeasibleError, fit, profile, write_profile_csv
from .filtering import DEFAULT_BURN, forecast, run_filter, write_trajectory_csv
from .invertibility import empirical_lyapunov, model_implied_lyapunov, region_scan, write_scan_csv
from .models import DomainError, InnovationDist, ModelKind, parse_box, parse_theta
from .simulate import (
    DEFAULT_BURN_IN,
    CsvFormatError,
    StationarityError,
    read_path_csv,
    simulate,
    stationarity_lyapunov,
    write_path_csv,
)
from .study import StudyConfig, run_study, write_study_csv

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class DiagnosticFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


COMMON_DEFAULTS = {"model": "egarch11", "dist": "normal", "seed": 0, "out_dir": None}

DEFAULTS = {
    "simulate": {"theta": None, "n": 1000, "burn_in": DEFAULT_BURN_IN},
    "fit": {"input": None, "box": None, "burn": DEFAULT_BURN, "starts": 8, "g_init": None},
    "diagnose": {"theta": None, "input": None, "m": 1_000_000, "trunc": 200},
    "study": {
        "theta": None, "box": None, "n": 4000, "reps": 100, "burn": DEFAULT_BURN, "burn_in": DEFAULT_BURN_IN,
        "starts": 8, "workers": None, "m": 100_000, "trunc": 400,
    },
    "scan": {"box": None, "grid": "3,5,5,5", "m": 100_000, "trunc": 200},
    "profile": {"input": None, "theta": None, "axis": "alpha", "grid": None, "burn": DEFAULT_BURN},
    "asymptotics": {"theta": None, "n": 1, "m": 100_000, "trunc": 400, "b22": "closed"},
}

# flags that do not change any output and stay out of config.json
_NOT_ECHOED = {"out_dir", "config", "command"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--model", choices=[m.value for m in ModelKind])
    p.add_argument("--dist", help="normal or t:<nu>")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir", help="run directory (default runs/<command>-<seed>)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="volinv", description="EGARCH/GARCH invertibility, filtering and QLIK estimation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a path, write t,x,sigma2")
    _add_common(p)
    p.add_argument("--theta", help="alpha,beta,gamma[,delta]")
    p.add_argument("--n", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)

    p = sub.add_parser("fit", help="constrained QLIK fit of a CSV series")
    _add_common(p)
    p.add_argument("--input", help="CSV with an x column")
    p.add_argument("--box", help="lo:hi per parameter, comma separated")
    p.add_argument("--burn", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--g-init", dest="g_init", type=float)

    p = sub.add_parser("diagnose", help="Lyapunov coefficients and the moment condition at theta")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--input", help="optional CSV for the empirical coefficient")
    p.add_argument("--m", type=int)
    p.add_argument("--trunc", type=int)

    p = sub.add_parser("study", help="repeated simulate-then-fit replications")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--box")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--burn", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--m", type=int, help="Monte Carlo chains for B")
    p.add_argument("--trunc", type=int, help="series truncation for B")

    p = sub.add_parser("scan", help="model-implied Lyapunov coefficient on a grid")
    _add_common(p)
    p.add_argument("--box")
    p.add_argument("--grid", help="points per axis, e.g. 3,5,5,5")
    p.add_argument("--m", type=int)
    p.add_argument("--trunc", type=int)

    p = sub.add_parser("profile", help="criterion and constraint along one axis")
    _add_common(p)
    p.add_argument("--input")
    p.add_argument("--theta")
    p.add_argument("--axis")
    p.add_argument("--grid", help="lo:hi:count")
    p.add_argument("--burn", type=int)

    p = sub.add_parser("asymptotics", help="B, sandwich and standard errors at theta")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--trunc", type=int)
    p.add_argument("--b22", choices=["closed", "exact"])
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cmd = args.command
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[cmd])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg) - {"command", "input_sha256"}
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        if loaded.get("command", cmd) != cmd:
            raise UsageError(f"config is for command {loaded['command']!r}, not {cmd!r}")
        cfg.update({k: v for k, v in loaded.items() if k in cfg})
    for key, val in vars(args).items():
        if key in cfg and val is not None:
            cfg[key] = val
    cfg["model"] = ModelKind.parse(cfg["model"]).value
    cfg["dist"] = InnovationDist.parse(cfg["dist"]).label()
    return cfg


def _theta(cfg, required=True):
    if cfg.get("theta") is None:
        if required:
            raise UsageError("--theta is required")
        return None
    return parse_theta(cfg["model"], cfg["theta"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: FsPath, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path: FsPath) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: FsPath) -> None:
    lines = [f"{_sha256(p)}  {p.name}\n" for p in sorted(out.iterdir()) if p.is_file() and p.name != "MANIFEST"]
    (out / "MANIFEST").write_text("".join(lines))


def _series_theta_string(th) -> str:
    return ",".join(repr(float(v)) for v in th.as_array())


# ---- commands -------------------------------------------------------------


def cmd_simulate(cfg: dict, out: FsPath) -> int:
    th = _theta(cfg)
    cfg["theta"] = _series_theta_string(th)
    path = simulate(cfg["model"], th, InnovationDist.parse(cfg["dist"]), n=cfg["n"], burn_in=cfg["burn_in"],
                    seed=cfg["seed"])
    write_path_csv(path, out / "path.csv")
    return EXIT_OK


def _read_input(cfg):
    if not cfg.get("input"):
        raise UsageError("--input is required")
    path = read_path_csv(cfg["input"])
    cfg["input_sha256"] = _sha256(FsPath(cfg["input"]))
    return path


def cmd_fit(cfg: dict, out: FsPath) -> int:
    path = _read_input(cfg)
    model = ModelKind.parse(cfg["model"])
    box = parse_box(model, cfg["box"], path.x)
    cfg["box"] = box.as_dict()
    opts = FitOptions(starts=cfg["starts"], burn=cfg["burn"], seed=cfg["seed"], g_init=cfg["g_init"])
    try:
        res = fit(model, path, box, opts)
    except InfeasibleError as exc:
        _write_json(out / "fit.json", {"error": str(exc), "converged": False, "n": len(path), "seed": cfg["seed"]})
        raise
    _write_json(out / "fit.json", res.to_json())
    traj = run_filter(model, res.theta_hat, path, cfg["g_init"], cfg["burn"])
    write_trajectory_csv(traj, out / "trajectory.csv")
    fc = forecast(model, res.theta_hat, path, cfg["g_init"])
    _write_json(out / "forecast.json", {"next_variance": fc.next_variance, "divergent": fc.divergent})
    return EXIT_OK


def diagnose(cfg: dict) -> tuple[dict, bool]:
    """Diagnostic payload and whether every check passed."""
    model = ModelKind.parse(cfg["model"])
    th = _theta(cfg)
    dist = InnovationDist.parse(cfg["dist"])
    payload: dict = {"theta": th.as_dict()}
    ok = True
    if model is ModelKind.EGARCH11:
        rep = model_implied_lyapunov(th, dist, m=cfg["m"], trunc=cfg["trunc"], seed=cfg["seed"])
        payload["model_implied"] = rep.as_dict()
        ok &= rep.value < 0
        mom = asy.innovation_moments(th, dist)
        mm = asy.check_mm_prime(mom)
        payload["moments"] = mom.as_dict()
        payload["mm_prime"] = mm.as_dict()
        ok &= mm.ok
    else:
        val, se = stationarity_lyapunov(th, dist, m=min(cfg["m"], 1_000_000), seed=cfg["seed"])
        payload["stationarity"] = {"value": val, "std_error": se}
        ok &= val < 0
        payload["fourth_moment_finite"] = dist.finite_fourth_moment
        ok &= dist.finite_fourth_moment
    if cfg.get("input"):
        path = _read_input(cfg)
        emp = empirical_lyapunov(th, path, model)
        payload["empirical"] = emp.as_dict()
        ok &= emp.value < 0
    payload["passed"] = bool(ok)
    return payload, bool(ok)


def cmd_diagnose(cfg: dict, out: FsPath) -> int:
    payload, ok = diagnose(cfg)
    cfg["theta"] = _series_theta_string(_theta(cfg))
    _write_json(out / "diagnose.json", payload)
    if not ok:
        raise DiagnosticFailure("diagnostic failed; see diagnose.json")
    return EXIT_OK


def cmd_study(cfg: dict, out: FsPath) -> int:
    model = ModelKind.parse(cfg["model"])
    th = _theta(cfg)
    dist = InnovationDist.parse(cfg["dist"])
    payload, ok = diagnose({**cfg, "input": None, "m": 100_000, "trunc": 200})
    _write_json(out / "diagnose.json", payload)
    if not ok:
        raise DiagnosticFailure("theta0 fails the invertibility or moment diagnostics; see diagnose.json")
    box = None if cfg["box"] is None else parse_box(model, cfg["box"])
    scfg = StudyConfig(
        model=model, theta0=th, n=cfg["n"], reps=cfg["reps"], dist=dist, seed=cfg["seed"], box=box,
        burn=cfg["burn"], burn_in=cfg["burn_in"], starts=cfg["starts"], workers=cfg["workers"],
        b_m=cfg["m"], b_L=cfg["trunc"],
    )
    res = run_study(scfg)
    write_study_csv(res, out / "study.csv")
    _write_json(out / "summary.json", res.summary())
    asy.write_report_json(res.report, out / "asymptotics.json")
    return EXIT_OK


def cmd_scan(cfg: dict, out: FsPath) -> int:
    model = ModelKind.parse(cfg["model"])
    if model is not ModelKind.EGARCH11:
        raise UsageError("scan applies to egarch11")
    box = parse_box(model, cfg["box"])
    cfg["box"] = box.as_dict()
    counts = [int(c) for c in str(cfg["grid"]).split(",")]
    rows = region_scan(box, counts, InnovationDist.parse(cfg["dist"]), m=cfg["m"], trunc=cfg["trunc"],
                       seed=cfg["seed"])
    write_scan_csv(rows, out / "scan.csv")
    return EXIT_OK


def cmd_profile(cfg: dict, out: FsPath) -> int:
    path = _read_input(cfg)
    model = ModelKind.parse(cfg["model"])
    th = _theta(cfg)
    if not cfg.get("grid"):
        raise UsageError("--grid lo:hi:count is required")
    try:
        lo, hi, k = str(cfg["grid"]).split(":")
        grid = np.linspace(float(lo), float(hi), int(k))
    except ValueError:
        raise UsageError(f"bad grid {cfg['grid']!r}; expected lo:hi:count") from None
    if cfg["axis"] not in model.param_names:
        raise UsageError(f"axis must be one of {model.param_names}")
    rows = profile(model, path, th, cfg["axis"], grid, burn=cfg["burn"])
    write_profile_csv(rows, cfg["axis"], out / "profile.csv")
    return EXIT_OK


def cmd_asymptotics(cfg: dict, out: FsPath) -> int:
    model = ModelKind.parse(cfg["model"])
    th = _theta(cfg)
    rep = asy.asymptotic_report(model, th, InnovationDist.parse(cfg["dist"]), n=cfg["n"], m=cfg["m"],
                                L=cfg["trunc"], seed=cfg["seed"], b22=cfg["b22"])
    asy.write_report_json(rep, out / "asymptotics.json")
    asy.write_report_csv(rep, out / "asymptotics.csv")
    if not rep.mm_prime_ok:
        raise DiagnosticFailure("moment condition E V^2 < 1 fails at theta")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
    "study": cmd_study,
    "scan": cmd_scan,
    "profile": cmd_profile,
    "asymptotics": cmd_asymptotics,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = FsPath(cfg["out_dir"] or os.path.join("runs", f"{args.command}-{cfg['seed']}"))
        out.mkdir(parents=True, exist_ok=True)
    except (UsageError, ValueError, OSError) as exc:
        print(f"volinv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    code = EXIT_OK
    try:
        code = COMMANDS[args.command](cfg, out)
    except (InfeasibleError, StationarityError, DiagnosticFailure, asy.LinearIndependenceError,
            asy.NearSingularError) as exc:
        print(f"volinv: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    except (UsageError, CsvFormatError, DomainError, ValueError, OSError) as exc:
        print(f"volinv: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    echo = {"command": args.command}
    echo.update({k: v for k, v in cfg.items() if k not in _NOT_ECHOED})
    try:
        _write_json(out / "config.json", echo)
        write_manifest(out)
    except OSError as exc:
        print(f"volinv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if code == EXIT_OK:
        print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
