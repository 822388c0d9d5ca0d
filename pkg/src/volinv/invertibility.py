"""Lyapunov diagnostics for invertibility of the EGARCH(1,1) filter.

The filter at ``theta`` contracts on average when the mean of
``log max(beta, (gamma X + delta|X|) exp(-alpha/(2(1-beta)))/2 - beta)`` is
negative. Two estimates are provided:

* ``empirical_lyapunov``: the sample mean over an observed path. A negative
  value is the feasibility constraint used by the estimator.
* ``model_implied_lyapunov``: the expectation under the model at ``theta0``,
  with ``log sigma^2`` replaced by its moving-average expansion in past
  innovations, estimated by Monte Carlo.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rng
from .mcstats import batch_means_se, iid_se
from .models import (
    InnovationDist,
    ModelKind,
    ParamBox,
    ParamVector,
    log_lipschitz,
    log_max_term,
    parse_theta,
)


class LyapunovKind(str, Enum):
    EMPIRICAL = "empirical_on_data"
    MODEL_IMPLIED = "model_implied_mc"


@dataclass(frozen=True)
class LyapunovReport:
    value: float
    std_error: float
    n_or_m: int
    kind: LyapunovKind
    # count of log(0) terms; when > 0, value is -inf
    neg_inf_terms: int = 0
    tail_bound: float | None = None

    @property
    def invertible(self) -> bool:
        return self.value < 0

    def as_dict(self) -> dict:
        return {
            "value": _json_float(self.value),
            "std_error": _json_float(self.std_error),
            "n_or_m": self.n_or_m,
            "kind": self.kind.value,
            "neg_inf_terms": self.neg_inf_terms,
            "tail_bound": None if self.tail_bound is None else _json_float(self.tail_bound),
        }


def _json_float(v: float):
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def _summarize(terms: np.ndarray, kind: LyapunovKind, dependent: bool, tail_bound=None) -> LyapunovReport:
    n_inf = int(np.count_nonzero(np.isneginf(terms)))
    if n_inf:
        return LyapunovReport(-math.inf, math.inf, terms.size, kind, n_inf, tail_bound)
    se = batch_means_se(terms) if dependent else iid_se(terms)
    return LyapunovReport(float(np.mean(terms)), se, terms.size, kind, 0, tail_bound)


def empirical_lyapunov(theta, path, model=None) -> LyapunovReport:
    """Sample mean of the log Lipschitz coefficient over the observations.

    ``path`` is a simulate.Path or an array of observations; ``model``
    defaults to the path's model, then to EGARCH(1,1). The standard error uses
    batch means because the terms inherit the serial dependence of
    ``|X_t|``.
    """
    x = np.asarray(getattr(path, "x", path), dtype=float)
    if model is None:
        model = getattr(path, "model", None) or ModelKind.EGARCH11
    model = ModelKind.parse(model)
    th = parse_theta(model, theta)
    if x.size < 2:
        raise ValueError("need at least two observations")
    terms = np.asarray(log_lipschitz(model, th, x), dtype=float)
    return _summarize(terms, LyapunovKind.EMPIRICAL, dependent=True)


def model_implied_lyapunov(
    theta0,
    dist: InnovationDist | None = None,
    m: int = 1_000_000,
    trunc: int = 200,
    seed: int = 0,
    chunk: int = 50_000,
) -> LyapunovReport:
    """Monte Carlo estimate of the model-implied Lyapunov coefficient.

    Each draw uses innovations ``Z_0, Z_-1, ..., Z_-trunc`` and evaluates
    ``log max(beta, exp(S/2) (gamma Z_0 + delta|Z_0|)/2 - beta)`` with
    ``S = sum_{k<trunc} beta**k (gamma Z_{-k-1} + delta|Z_{-k-1}|)``.
    The omitted tail of ``S`` has mean at most
    ``beta**trunc * E|W| / (1-beta)``, reported as ``tail_bound``.
    """
    th = parse_theta(ModelKind.EGARCH11, theta0)
    dist = dist or InnovationDist.normal()
    b = th.beta
    weights = b ** np.arange(trunc)
    gen = rng.stream(seed, purpose=rng.LYAPUNOV)
    terms = np.empty(m)
    for start in range(0, m, chunk):
        size = min(chunk, m - start)
        z = dist.sample(gen, (size, trunc + 1))
        w = th.gamma * z + th.delta * np.abs(z)
        s = w[:, 1:] @ weights
        with np.errstate(divide="ignore"):
            log_term = np.log(0.5 * w[:, 0]) + 0.5 * s
        terms[start : start + size] = log_max_term(b, log_term)
    e_abs_w = th.gamma * dist.expect(lambda z: z) + th.delta * dist.abs_moment()
    tail = b**trunc * abs(e_abs_w) / (1.0 - b)
    return _summarize(terms, LyapunovKind.MODEL_IMPLIED, dependent=False, tail_bound=tail)


def grid_points(box: ParamBox, counts) -> list[ParamVector]:
    """Cartesian grid over the box; EGARCH points with delta < |gamma| are skipped."""
    counts = list(counts)
    if len(counts) != box.model.n_params:
        raise ValueError("need one grid count per parameter")
    axes = [np.linspace(lo, hi, int(c)) for lo, hi, c in zip(box.lower, box.upper, counts)]
    pts = []
    for combo in itertools.product(*axes):
        th = ParamVector.from_array(box.model, combo)
        if box.contains(th):
            pts.append(th)
    return pts


def region_scan(
    box: ParamBox,
    counts,
    dist: InnovationDist | None = None,
    m: int = 100_000,
    trunc: int = 200,
    seed: int = 0,
) -> list[tuple[ParamVector, LyapunovReport]]:
    """Model-implied Lyapunov coefficient on a grid.

    Every grid point reuses the same seed (common random numbers), so the
    scanned surface is a deterministic, continuous function of theta.
    """
    if box.model is not ModelKind.EGARCH11:
        raise ValueError("region_scan applies to EGARCH(1,1)")
    return [(th, model_implied_lyapunov(th, dist, m, trunc, seed)) for th in grid_points(box, counts)]


def write_scan_csv(rows, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "beta", "gamma", "delta", "value", "se"])
        for th, rep in rows:
            w.writerow([f"{th.alpha:.17g}", f"{th.beta:.17g}", f"{th.gamma:.17g}", f"{th.delta:.17g}",
                        f"{rep.value:.17g}", f"{rep.std_error:.17g}"])
