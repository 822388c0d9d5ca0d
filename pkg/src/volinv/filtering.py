"""Observation-driven filtering, the QLIK criterion and volatility forecasts.

The filter runs ``g_t = sre_step(g_{t-1}, X_{t-1})`` from an arbitrary start
``g_init``. The observation before the sample is unavailable and taken as
``X_0 = 0``, so ``g[0] = alpha + beta * g_init`` is the forecast of the
variance of ``x[0]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .models import ModelKind, ParamVector, link, parse_theta, sre_step

DEFAULT_BURN = 50


@dataclass(frozen=True)
class FilterTrajectory:
    g: np.ndarray
    theta: ParamVector
    model: ModelKind
    g_init: float
    burn: int = DEFAULT_BURN
    divergent: bool = False

    @property
    def sigma2_hat(self) -> np.ndarray:
        return link(self.model, self.g)

    def __len__(self) -> int:
        return int(self.g.shape[0])


@dataclass(frozen=True)
class QlikValue:
    value: float
    n_effective: int


@dataclass(frozen=True)
class Forecast:
    sigma2_hat: np.ndarray
    next_variance: float
    divergent: bool


def _as_x(path) -> np.ndarray:
    x = np.ascontiguousarray(getattr(path, "x", path), dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("path must be a nonempty 1-d series")
    return x


def default_g_init(theta: ParamVector) -> float:
    """``alpha/(1-beta)`` for both models."""
    return theta.floor


def _resolve_init(model: ModelKind, th: ParamVector, g_init: float | None) -> float:
    if g_init is None:
        return default_g_init(th)
    if model is ModelKind.EGARCH11:
        return max(float(g_init), th.floor)
    return float(g_init)


def run_filter(model, theta, path, g_init: float | None = None, burn: int = DEFAULT_BURN) -> FilterTrajectory:
    """Filtered states for every observation.

    For EGARCH ``g_init`` is clamped up to ``alpha/(1-beta)``. States beyond
    ``+-700`` are clipped there and the trajectory is flagged divergent.
    """
    model = ModelKind.parse(model)
    th = parse_theta(model, theta)
    x = _as_x(path)
    g0 = _resolve_init(model, th, g_init)
    if model is ModelKind.EGARCH11:
        g, divergent = _kernels.egarch_filter(th.alpha, th.beta, th.gamma, th.delta, x, g0)
    else:
        g = _kernels.garch_filter(th.alpha, th.beta, th.gamma, x, g0)
        divergent = not bool(np.all(np.isfinite(g)))
    return FilterTrajectory(g=g, theta=th, model=model, g_init=g0, burn=burn, divergent=bool(divergent))


def qlik_value(model: ModelKind, th: ParamVector, x: np.ndarray, g_init: float | None, burn: int) -> float:
    """Unchecked fast path used by the optimizer; inputs must already be valid."""
    g0 = _resolve_init(model, th, g_init)
    if model is ModelKind.EGARCH11:
        return _kernels.egarch_qlik(th.alpha, th.beta, th.gamma, th.delta, x, g0, burn)
    return _kernels.garch_qlik(th.alpha, th.beta, th.gamma, x, g0, burn)


def qlik(model, theta, path, g_init: float | None = None, burn: int = DEFAULT_BURN) -> QlikValue:
    """Mean of ``(x_t**2 / v_t + log v_t)/2`` over ``t >= burn`` with ``v_t = link(g_t)``.

    Divergent trajectories give ``+inf``.
    """
    model = ModelKind.parse(model)
    th = parse_theta(model, theta)
    x = _as_x(path)
    if not 0 <= burn < x.size:
        raise ValueError(f"need 0 <= burn < n; got burn={burn}, n={x.size}")
    return QlikValue(float(qlik_value(model, th, x, g_init, burn)), x.size - burn)


def qlik_terms(traj: FilterTrajectory, path) -> np.ndarray:
    """Per-observation criterion terms for a trajectory (no burn applied)."""
    x = _as_x(path)
    v = traj.sigma2_hat
    return 0.5 * (x * x / v + np.log(v))


def forecast(model, fit_theta, path, g_init: float | None = None) -> Forecast:
    """In-sample variance forecasts and the one-step-ahead value after the last observation."""
    traj = run_filter(model, fit_theta, path, g_init)
    x = _as_x(path)
    g_last = float(traj.g[-1])
    if traj.divergent:
        nxt = math.inf
    else:
        nxt = float(link(traj.model, sre_step(traj.model, traj.theta, g_last, float(x[-1]))))
    return Forecast(sigma2_hat=traj.sigma2_hat, next_variance=nxt, divergent=traj.divergent)


def write_trajectory_csv(traj: FilterTrajectory, filename) -> None:
    s2 = traj.sigma2_hat
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "g", "sigma2_hat"])
        for t in range(len(traj)):
            w.writerow([t + 1, f"{traj.g[t]:.17g}", f"{s2[t]:.17g}"])
