"""Repeated simulate-then-fit experiments at a fixed parameter.

Replication ``r`` simulates with seed ``seed ^ r`` and fits with the same
seed, so each replication is reproducible on its own and independent of the
worker count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import AsymptoticReport, asymptotic_report
from .estimate import FitOptions, InfeasibleError, fit
from .models import InnovationDist, ModelKind, ParamBox, ParamVector, parse_box, parse_theta
from .simulate import DEFAULT_BURN_IN, simulate

Z_975 = stats.norm.ppf(0.975)


@dataclass(frozen=True)
class StudyConfig:
    model: ModelKind
    theta0: ParamVector
    n: int
    reps: int
    dist: InnovationDist = field(default_factory=InnovationDist.normal)
    seed: int = 0
    box: ParamBox | None = None
    burn: int = 50
    burn_in: int = DEFAULT_BURN_IN
    starts: int = 8
    workers: int | None = None
    b_m: int = 100_000
    b_L: int = 400

    def __post_init__(self):
        model = ModelKind.parse(self.model)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "theta0", parse_theta(model, self.theta0))
        if self.box is not None:
            object.__setattr__(self, "box", parse_box(model, self.box))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        d["theta0"] = self.theta0.as_dict()
        d["dist"] = self.dist.label()
        d["box"] = None if self.box is None else self.box.as_dict()
        return d


@dataclass(frozen=True)
class Replication:
    rep: int
    theta_hat: ParamVector | None
    qlik: float
    converged: bool
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.theta_hat is not None


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    replications: list[Replication]
    report: AsymptoticReport

    def estimates(self) -> np.ndarray:
        """Successful estimates as a (k, n_params) array in replication order."""
        rows = [r.theta_hat.as_array() for r in self.replications if r.ok]
        return np.array(rows).reshape(len(rows), self.config.model.n_params)

    def summary(self) -> dict:
        cfg = self.config
        est = self.estimates()
        theta0 = cfg.theta0.as_array()
        se = self.report.se
        err = est - theta0
        out = {
            "reps": cfg.reps,
            "n": cfg.n,
            "n_ok": int(est.shape[0]),
            "n_failed": int(sum(not r.ok for r in self.replications)),
            "n_not_converged": int(sum(r.ok and not r.converged for r in self.replications)),
            "asymptotic_se": dict(zip(cfg.model.param_names, se.tolist())),
            "params": {},
        }
        for i, name in enumerate(cfg.model.param_names):
            e = err[:, i]
            zs = e / se[i]
            k = e.size
            out["params"][name] = {
                "theta0": float(theta0[i]),
                "bias": float(e.mean()) if k else math.nan,
                "rmse": float(np.sqrt(np.mean(e * e))) if k else math.nan,
                "median_abs_error": float(np.median(np.abs(e))) if k else math.nan,
                "coverage_95": float(np.mean(np.abs(zs) <= Z_975)) if k else math.nan,
                "skew": float(stats.skew(zs)) if k > 2 else math.nan,
                "excess_kurtosis": float(stats.kurtosis(zs, fisher=True)) if k > 3 else math.nan,
            }
        return out


def _one(args) -> Replication:
    cfg, r = args
    seed = cfg.seed ^ r
    path = simulate(cfg.model, cfg.theta0, cfg.dist, n=cfg.n, burn_in=cfg.burn_in, seed=seed)
    box = cfg.box if cfg.box is not None else parse_box(cfg.model, None, path.x)
    try:
        res = fit(cfg.model, path, box, FitOptions(starts=cfg.starts, burn=cfg.burn, seed=seed))
    except InfeasibleError as exc:
        return Replication(r, None, math.nan, False, str(exc))
    return Replication(r, res.theta_hat, res.qlik, res.converged)


def run_study(cfg: StudyConfig, report: AsymptoticReport | None = None) -> StudyResult:
    """Run ``cfg.reps`` replications and attach the asymptotic report at ``theta0``.

    Replications that end infeasible are kept with ``theta_hat = None``.
    """
    if cfg.reps < 1 or cfg.n < 100:
        raise ValueError("need reps >= 1 and n >= 100")
    model = ModelKind.parse(cfg.model)
    parse_theta(model, cfg.theta0)
    if report is None:
        report = asymptotic_report(model, cfg.theta0, cfg.dist, n=cfg.n, m=cfg.b_m, L=cfg.b_L, seed=cfg.seed)
    workers = cfg.workers or os.cpu_count() or 1
    jobs = [(cfg, r) for r in range(cfg.reps)]
    if workers == 1:
        reps = [_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            reps = list(pool.map(_one, jobs, chunksize=max(1, cfg.reps // (4 * workers))))
    reps.sort(key=lambda r: r.rep)
    return StudyResult(cfg, reps, report)


def median_error_ratio(small: StudyResult, large: StudyResult) -> dict:
    """Per-coordinate ratio of median absolute errors, smaller sample over larger."""
    a = small.summary()["params"]
    b = large.summary()["params"]
    return {k: a[k]["median_abs_error"] / b[k]["median_abs_error"] for k in a}


def write_study_csv(result: StudyResult, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "alpha", "beta", "gamma", "delta", "qlik", "converged"])
        for r in result.replications:
            if r.ok:
                vals = [f"{v:.17g}" if v is not None else "" for v in r.theta_hat.as_dict().values()]
                vals += [""] * (4 - len(vals))
                w.writerow([r.rep, *vals, f"{r.qlik:.17g}", str(r.converged).lower()])
            else:
                w.writerow([r.rep, "", "", "", "", "", "false"])
