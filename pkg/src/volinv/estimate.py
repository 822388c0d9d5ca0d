"""QLIK minimization under the empirical invertibility constraint.

The estimator minimizes the penalized objective

    F(theta) = qlik(theta) + penalty * max(0, lyap(theta) + margin)**2

where ``lyap`` is the empirical Lyapunov coefficient of the filter on the
data, by Nelder-Mead from several Latin-hypercube starts over the box.
Feasibility (``lyap < 0``) is checked again at each end point with the
penalty removed, and the best feasible end point is reported.

The search runs in unit coordinates. For EGARCH the delta coordinate is
replaced by ``u`` in [0, 1] with ``delta = d0 + u (delta_hi - d0)`` and
``d0 = max(delta_lo, |gamma|)``, which turns ``{delta >= |gamma|}`` into a box.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import _kernels, rng
from .filtering import DEFAULT_BURN, qlik_value
from .models import ModelKind, ParamBox, ParamVector, parse_box, parse_theta

# stands in for qlik where the filter diverges, so the penalty still steers
_PLATEAU = 1e6


class InfeasibleError(RuntimeError):
    """Every start ended outside the empirical invertibility region."""

    def __init__(self, message: str, starts=None):
        super().__init__(message)
        self.starts = starts or []


@dataclass(frozen=True)
class FitOptions:
    starts: int = 8
    penalty: float = 1e3
    margin: float = 1e-3
    xtol: float = 1e-6
    maxiter: int = 2000
    restarts: int = 1
    burn: int = DEFAULT_BURN
    seed: int = 0
    workers: int = 1
    g_init: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StartResult:
    index: int
    start: ParamVector
    start_objective: float
    theta: ParamVector
    qlik: float
    constraint: float
    iterations: int
    nm_converged: bool

    @property
    def feasible(self) -> bool:
        return self.constraint < 0 and math.isfinite(self.qlik)


@dataclass(frozen=True)
class FitResult:
    theta_hat: ParamVector
    qlik: float
    constraint_value: float
    n: int
    starts: int
    converged: bool
    iterations: int
    best_start_index: int
    seed: int
    model: ModelKind
    box: ParamBox
    start_results: list[StartResult] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        c = self.constraint_value
        return {
            "model": self.model.value,
            "theta_hat": self.theta_hat.as_dict(),
            "qlik": self.qlik,
            "constraint": c if math.isfinite(c) else ("-inf" if c < 0 else "inf"),
            "converged": self.converged,
            "n": self.n,
            "seed": self.seed,
            "starts": self.starts,
            "iterations": self.iterations,
            "best_start_index": self.best_start_index,
            "box": self.box.as_dict(),
        }


def constraint_value(model: ModelKind, th: ParamVector, x: np.ndarray) -> float:
    """Empirical Lyapunov coefficient (mean log Lipschitz bound) on ``x``."""
    if model is ModelKind.GARCH11:
        return math.log(th.beta) if th.beta > 0 else -math.inf
    return float(_kernels.egarch_log_lipschitz_mean(th.alpha, th.beta, th.gamma, th.delta, x))


class _UnitCoords:
    """Map between unit-cube search coordinates and parameters in the box."""

    def __init__(self, box: ParamBox):
        self.box = box
        self.model = box.model
        lo = list(box.lower)
        hi = list(box.upper)
        if self.model is ModelKind.EGARCH11:
            lo[2], hi[2] = box.gamma_range()
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        if self.model is ModelKind.EGARCH11:
            self.free = [i for i in range(3) if hi[i] > lo[i]]
            if box.upper[3] > box.lower[3]:
                self.free.append(3)
        else:
            self.free = [i for i in range(3) if hi[i] > lo[i]]

    @property
    def dim(self) -> int:
        return len(self.free)

    def to_theta(self, y: np.ndarray) -> ParamVector:
        u = np.zeros(self.model.n_params)
        u[self.free] = np.clip(y, 0.0, 1.0)
        vals = self.lo + u * (self.hi - self.lo)
        if self.model is ModelKind.EGARCH11:
            d0 = max(self.box.lower[3], abs(vals[2]))
            d_hi = self.box.upper[3]
            vals[3] = d0 + u[3] * (d_hi - d0) if d_hi > self.box.lower[3] else d_hi
        return ParamVector.from_array(self.model, vals)

    def to_unit(self, theta: ParamVector) -> np.ndarray:
        vals = theta.as_array()
        width = self.hi - self.lo
        u = np.where(width > 0, (vals - self.lo) / np.where(width > 0, width, 1.0), 0.0)
        if self.model is ModelKind.EGARCH11 and 3 in self.free:
            d0 = max(self.box.lower[3], abs(vals[2]))
            span = self.box.upper[3] - d0
            u[3] = (vals[3] - d0) / span if span > 0 else 0.0
        return np.clip(u[self.free], 0.0, 1.0)


def _simplex(y0: np.ndarray, step: float) -> np.ndarray:
    k = y0.size
    sim = np.tile(y0, (k + 1, 1))
    for i in range(k):
        sim[i + 1, i] += step if y0[i] + step <= 1.0 else -step
    return sim


class _Objective:
    def __init__(self, model, coords, x, opts):
        self.model = model
        self.coords = coords
        self.x = x
        self.opts = opts

    def parts(self, th: ParamVector) -> tuple[float, float]:
        q = qlik_value(self.model, th, self.x, self.opts.g_init, self.opts.burn)
        return float(q), constraint_value(self.model, th, self.x)

    def penalized(self, q: float, lyap: float) -> float:
        viol = max(0.0, lyap + self.opts.margin)
        base = q if math.isfinite(q) else _PLATEAU
        return base + self.opts.penalty * viol * viol

    def __call__(self, y: np.ndarray) -> float:
        th = self.coords.to_theta(y)
        return self.penalized(*self.parts(th))


def latin_hypercube_starts(box: ParamBox, count: int, seed: int) -> list[ParamVector]:
    """Latin-hypercube start points in the box (joint EGARCH restriction respected)."""
    coords = _UnitCoords(box)
    if coords.dim == 0:
        return [coords.to_theta(np.zeros(0))] * count
    # scipy spawns child streams, which needs a seed sequence behind the generator
    entropy = int(rng.stream(seed, purpose=rng.STARTS).integers(2**63))
    sampler = qmc.LatinHypercube(d=coords.dim, seed=entropy)
    return [coords.to_theta(y) for y in sampler.random(count)]


def _run_start(index: int, y0: np.ndarray, obj: _Objective, opts: FitOptions) -> StartResult:
    coords = obj.coords
    start = coords.to_theta(y0)
    f0 = obj(y0)
    y = y0
    iterations = 0
    nm_ok = True
    if coords.dim > 0:
        step = 0.1
        for _ in range(1 + max(0, opts.restarts)):
            res = minimize(
                obj,
                y,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0)] * coords.dim,
                options=dict(
                    xatol=opts.xtol,
                    fatol=math.inf,
                    maxiter=opts.maxiter,
                    initial_simplex=_simplex(y, step),
                ),
            )
            y = np.clip(res.x, 0.0, 1.0)
            iterations += int(res.nit)
            nm_ok = bool(res.success)
            step = 0.02
    th = coords.to_theta(y)
    q, lyap = obj.parts(th)
    return StartResult(index, start, f0, th, q, lyap, iterations, nm_ok)


def fit(model, path, box: ParamBox | None = None, opts: FitOptions | None = None) -> FitResult:
    """Constrained QLIK estimate of the model parameter.

    Raises InfeasibleError when no start ends at a point with negative
    empirical Lyapunov coefficient.
    """
    model = ModelKind.parse(model)
    opts = opts or FitOptions()
    x = np.ascontiguousarray(getattr(path, "x", path), dtype=float)
    if x.size < 100:
        raise ValueError(f"need at least 100 observations, got {x.size}")
    if not 0 <= opts.burn < x.size:
        raise ValueError("burn must be smaller than the sample")
    box = parse_box(model, box, x)
    if box.model is not model:
        raise ValueError("box model does not match")
    coords = _UnitCoords(box)
    obj = _Objective(model, coords, x, opts)
    starts = latin_hypercube_starts(box, opts.starts, opts.seed)
    y_starts = [coords.to_unit(s) for s in starts]

    if opts.workers > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            results = list(pool.map(lambda a: _run_start(a[0], a[1], obj, opts), enumerate(y_starts)))
    else:
        results = [_run_start(i, y0, obj, opts) for i, y0 in enumerate(y_starts)]
    results.sort(key=lambda r: r.index)

    feasible = [r for r in results if r.feasible]
    if not feasible:
        best_c = min(r.constraint for r in results)
        raise InfeasibleError(
            f"no feasible point found: all {len(results)} starts end with empirical Lyapunov >= 0 "
            f"(smallest {best_c:.4g})",
            results,
        )
    best = min(feasible, key=lambda r: (r.qlik, r.constraint, r.index))
    return FitResult(
        theta_hat=best.theta,
        qlik=best.qlik,
        constraint_value=best.constraint,
        n=int(x.size),
        starts=opts.starts,
        converged=best.nm_converged and best.feasible,
        iterations=best.iterations,
        best_start_index=best.index,
        seed=opts.seed,
        model=model,
        box=box,
        start_results=results,
    )


@dataclass(frozen=True)
class ProfileRow:
    value: float
    theta: ParamVector | None
    qlik: float
    constraint: float


def profile(model, path, theta, axis, grid, burn: int = DEFAULT_BURN, g_init: float | None = None) -> list[ProfileRow]:
    """qlik and empirical Lyapunov along one coordinate through ``theta``.

    Grid points outside the admissible set get ``nan`` values.
    """
    model = ModelKind.parse(model)
    th = parse_theta(model, theta)
    x = np.ascontiguousarray(getattr(path, "x", path), dtype=float)
    idx = model.param_names.index(axis) if isinstance(axis, str) else int(axis)
    rows = []
    for v in np.asarray(grid, dtype=float):
        vals = th.as_array()
        vals[idx] = v
        try:
            p = parse_theta(model, vals)
        except ValueError:
            rows.append(ProfileRow(float(v), None, math.nan, math.nan))
            continue
        q = float(qlik_value(model, p, x, g_init, burn))
        rows.append(ProfileRow(float(v), p, q, constraint_value(model, p, x)))
    return rows


def write_profile_csv(rows: list[ProfileRow], axis: str, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([axis, "qlik", "constraint"])
        for r in rows:
            w.writerow([f"{r.value:.17g}", f"{r.qlik:.17g}", f"{r.constraint:.17g}"])
