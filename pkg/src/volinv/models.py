"""GARCH(1,1) and EGARCH(1,1) as observation-driven recursions.

Both models are written as a one-lag recursion on a transformed volatility
``g`` driven by the previous observation::

    GARCH(1,1):   g' = alpha + beta*g + gamma*x**2                 (g = sigma^2)
    EGARCH(1,1):  g' = alpha + beta*g + (gamma*x + delta*|x|)*exp(-g/2)
                                                                   (g = log sigma^2)

The EGARCH map is restricted to the half line ``g >= alpha/(1-beta)``. With
``beta >= 0`` and ``delta >= |gamma|`` the innovation term is nonnegative, so
the half line is mapped into itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats


class DomainError(ValueError):
    """Argument outside the domain of a model map or parameter set."""


class ModelKind(str, Enum):
    GARCH11 = "garch11"
    EGARCH11 = "egarch11"

    @property
    def n_params(self) -> int:
        return 3 if self is ModelKind.GARCH11 else 4

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[: self.n_params]

    @classmethod
    def parse(cls, value: "str | ModelKind") -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        key = str(value).lower().replace("-", "").replace("_", "").replace("(", "").replace(")", "").replace(",", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown model {value!r}; expected garch11 or egarch11")


PARAM_NAMES = ("alpha", "beta", "gamma", "delta")


@dataclass(frozen=True)
class ParamVector:
    """Model parameter ``(alpha, beta, gamma, delta)``; ``delta`` is None for GARCH."""

    alpha: float
    beta: float
    gamma: float
    delta: float | None = None

    @classmethod
    def from_array(cls, model: ModelKind, values: Sequence[float]) -> "ParamVector":
        values = [float(v) for v in values]
        if len(values) != model.n_params:
            raise ValueError(f"{model.value} takes {model.n_params} parameters, got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        vals = [self.alpha, self.beta, self.gamma]
        if self.delta is not None:
            vals.append(self.delta)
        return np.array(vals, dtype=float)

    def as_dict(self) -> dict[str, float | None]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}

    @property
    def floor(self) -> float:
        """``alpha/(1-beta)``: lower end of the EGARCH state space."""
        return self.alpha / (1.0 - self.beta)

    def validate(self, model: ModelKind) -> "ParamVector":
        a, b, c, d = self.alpha, self.beta, self.gamma, self.delta
        if not all(math.isfinite(v) for v in (a, b, c)):
            raise DomainError(f"non-finite parameter {self}")
        if model is ModelKind.GARCH11:
            if d is not None:
                raise DomainError("GARCH(1,1) has no delta coefficient")
            if not (a > 0 and 0 <= b < 1 and c >= 0):
                raise DomainError(f"GARCH(1,1) needs alpha > 0, 0 <= beta < 1, gamma >= 0; got {self}")
        else:
            if d is None or not math.isfinite(d):
                raise DomainError("EGARCH(1,1) needs a finite delta")
            if not 0 <= b < 1:
                raise DomainError(f"EGARCH(1,1) needs 0 <= beta < 1; got beta={b}")
            if d < abs(c):
                raise DomainError(f"EGARCH(1,1) needs delta >= |gamma|; got gamma={c}, delta={d}")
        return self


def _pv(theta: "ParamVector | Sequence[float]", model: ModelKind) -> ParamVector:
    if isinstance(theta, ParamVector):
        return theta
    return ParamVector.from_array(model, theta)


@dataclass(frozen=True)
class ParamBox:
    """Compact search set: per-coordinate closed intervals.

    For EGARCH the joint restriction ``delta >= |gamma|`` is applied on top of
    the ``delta`` interval, so the effective set is
    ``{theta in box : delta >= |gamma|}``.
    """

    model: ModelKind
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind.parse(self.model))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        self.validate()

    @classmethod
    def default(cls, model: ModelKind, x: np.ndarray | None = None) -> "ParamBox":
        """Shipped default boxes.

        EGARCH: alpha in [-5, 5], beta in [0, 0.999], gamma in [-5, 5],
        delta in [0, 5] (with delta >= |gamma|). GARCH: alpha in
        [1e-4, 2] * mean(x**2) when data are given (else [1e-6, 10]),
        beta in [0, 0.999], gamma in [0, 1].
        """
        model = ModelKind.parse(model)
        if model is ModelKind.EGARCH11:
            return cls(model, (-5.0, 0.0, -5.0, 0.0), (5.0, 0.999, 5.0, 5.0))
        if x is not None:
            s2 = float(np.mean(np.square(x)))
            if s2 > 0 and math.isfinite(s2):
                return cls(model, (1e-4 * s2, 0.0, 0.0), (2.0 * s2, 0.999, 1.0))
        return cls(model, (1e-6, 0.0, 0.0), (10.0, 0.999, 1.0))

    def validate(self) -> None:
        k = self.model.n_params
        if len(self.lower) != k or len(self.upper) != k:
            raise ValueError(f"{self.model.value} box needs {k} intervals")
        for name, lo, hi in zip(self.model.param_names, self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad interval for {name}: [{lo}, {hi}]")
        if self.model is ModelKind.GARCH11:
            a, b, c = zip(self.lower, self.upper)
            if a[0] <= 0 or b[0] < 0 or b[1] >= 1 or c[0] < 0:
                raise ValueError("GARCH box must satisfy alpha > 0, 0 <= beta < 1, gamma >= 0")
        else:
            b = (self.lower[1], self.upper[1])
            if b[0] < 0 or b[1] >= 1:
                raise ValueError("EGARCH box must satisfy 0 <= beta < 1")
            if self.upper[3] < 0:
                raise ValueError("EGARCH box needs delta upper >= 0")
            g_lo, g_hi = self.gamma_range()
            if g_lo > g_hi:
                raise ValueError("EGARCH box has no point with delta >= |gamma|")

    def gamma_range(self) -> tuple[float, float]:
        """gamma interval for which some delta in the box satisfies delta >= |gamma|."""
        d_hi = self.upper[3]
        return max(self.lower[2], -d_hi), min(self.upper[2], d_hi)

    def contains(self, theta: "ParamVector | Sequence[float]", tol: float = 1e-12) -> bool:
        arr = _pv(theta, self.model).as_array()
        inside = all(lo - tol <= v <= hi + tol for v, lo, hi in zip(arr, self.lower, self.upper))
        if self.model is ModelKind.EGARCH11:
            inside = inside and arr[3] >= abs(arr[2]) - tol
        return inside

    def as_dict(self) -> dict[str, list[float]]:
        return {n: [lo, hi] for n, lo, hi in zip(self.model.param_names, self.lower, self.upper)}


@dataclass(frozen=True)
class InnovationDist:
    """Standardized innovation law: ``E Z = 0``, ``E Z**2 = 1``.

    ``kind`` is ``"normal"`` or ``"t"``; for ``"t"`` the Student-t(nu) draw is
    multiplied by ``sqrt((nu-2)/nu)``.
    """

    kind: str = "normal"
    nu: float | None = None
    _scale: float = field(init=False, repr=False, compare=False, default=1.0)

    def __post_init__(self):
        if self.kind == "normal":
            if self.nu is not None:
                raise ValueError("normal innovations take no nu")
        elif self.kind == "t":
            if self.nu is None or not self.nu > 2:
                raise ValueError("Student-t innovations need nu > 2")
            object.__setattr__(self, "_scale", math.sqrt((self.nu - 2.0) / self.nu))
        else:
            raise ValueError(f"unknown innovation kind {self.kind!r}")

    @classmethod
    def normal(cls) -> "InnovationDist":
        return cls("normal")

    @classmethod
    def student_t(cls, nu: float) -> "InnovationDist":
        return cls("t", float(nu))

    @classmethod
    def parse(cls, text: "str | InnovationDist") -> "InnovationDist":
        """Parse ``normal`` or ``t:<nu>`` (``t5`` also accepted)."""
        if isinstance(text, InnovationDist):
            return text
        s = str(text).strip().lower()
        if s in ("normal", "gaussian", "n"):
            return cls.normal()
        if s.startswith("t"):
            nu = s[1:].lstrip(":=")
            return cls.student_t(float(nu))
        raise ValueError(f"cannot parse innovation distribution {text!r}")

    def label(self) -> str:
        return "normal" if self.kind == "normal" else f"t:{self.nu:g}"

    @property
    def finite_fourth_moment(self) -> bool:
        return self.kind == "normal" or self.nu > 4

    def pdf(self, z):
        if self.kind == "normal":
            return stats.norm.pdf(z)
        s = self._scale
        return stats.t.pdf(np.asarray(z) / s, self.nu) / s

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size)
        return rng.standard_t(self.nu, size) * self._scale

    def expect(self, f: Callable[[float], float], tol: float = 1e-10) -> float:
        """``E f(Z)`` by adaptive quadrature, split at 0 for the ``|z|`` kink."""
        pdf = self.pdf
        kw = dict(epsabs=tol * 1e-3, epsrel=tol, limit=400)
        left, _ = integrate.quad(lambda z: f(z) * pdf(z), -np.inf, 0.0, **kw)
        right, _ = integrate.quad(lambda z: f(z) * pdf(z), 0.0, np.inf, **kw)
        return left + right

    def abs_moment(self) -> float:
        """``E|Z|``, by quadrature."""
        return self.expect(abs)

    def fourth_moment(self) -> float:
        """``E Z**4``; infinite for Student-t with nu <= 4."""
        if not self.finite_fourth_moment:
            return math.inf
        if self.kind == "normal":
            return 3.0
        return self.expect(lambda z: z**4)


def sre_step(model: ModelKind, theta, state: float, x_prev: float) -> float:
    """One step of the observation-driven recursion."""
    model = ModelKind.parse(model)
    th = _pv(theta, model)
    if model is ModelKind.GARCH11:
        return th.alpha + th.beta * state + th.gamma * x_prev * x_prev
    floor = th.floor
    if state < floor - 1e-12 * max(1.0, abs(floor)):
        raise DomainError(f"EGARCH state {state} below alpha/(1-beta) = {floor}")
    w = th.gamma * x_prev + th.delta * abs(x_prev)
    return th.alpha + th.beta * state + w * math.exp(-state / 2.0)


def lipschitz_coeff(model: ModelKind, theta, x_prev):
    """Lipschitz bound of ``sre_step`` in its state argument.

    GARCH: ``beta``. EGARCH on ``[alpha/(1-beta), inf)``:
    ``max(beta, (gamma*x + delta*|x|) * exp(-alpha/(2(1-beta))) / 2 - beta)``.
    Accepts scalar or array ``x_prev``.
    """
    model = ModelKind.parse(model)
    th = _pv(theta, model)
    x = np.asarray(x_prev, dtype=float)
    if model is ModelKind.GARCH11:
        out = np.full(x.shape, th.beta)
    else:
        w = th.gamma * x + th.delta * np.abs(x)
        with np.errstate(over="ignore"):
            out = np.maximum(th.beta, 0.5 * w * np.exp(-th.floor / 2.0) - th.beta)
    return float(out) if out.ndim == 0 else out


def log_max_term(beta: float, log_term):
    """``log(max(beta, exp(log_term) - beta))`` without overflow.

    ``log_term`` may be ``-inf`` (a zero innovation term).
    """
    u = np.asarray(log_term, dtype=float)
    if beta <= 0.0:
        return u.copy() if u.ndim else float(u)
    log_b = math.log(beta)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        big = u > math.log(2.0 * beta)
        safe_u = np.where(big, u, 0.0)
        # beta * exp(-u) < 1/2 on this branch; the clamp only absorbs rounding
        ratio = np.minimum(beta * np.exp(-safe_u), 0.5)
        val = np.where(big, safe_u + np.log1p(-ratio), log_b)
    return float(val) if val.ndim == 0 else val


def log_lipschitz(model: ModelKind, theta, x_prev):
    """``log lipschitz_coeff``, computed in log space (finite for huge exponents)."""
    model = ModelKind.parse(model)
    th = _pv(theta, model)
    x = np.asarray(x_prev, dtype=float)
    if model is ModelKind.GARCH11:
        with np.errstate(divide="ignore"):
            out = np.full(x.shape, np.log(th.beta) if th.beta > 0 else -np.inf)
        return float(out) if out.ndim == 0 else out
    w = th.gamma * x + th.delta * np.abs(x)
    with np.errstate(divide="ignore"):
        log_term = np.log(0.5 * np.maximum(w, 0.0)) - th.floor / 2.0
    return log_max_term(th.beta, log_term)


def link(model: ModelKind, g):
    """State to variance: ``exp`` for EGARCH, identity for GARCH."""
    model = ModelKind.parse(model)
    if model is ModelKind.EGARCH11:
        return np.exp(g) if isinstance(g, np.ndarray) else math.exp(g)
    return g


def inv_link(model: ModelKind, v):
    """Variance to state; GARCH requires ``v > 0`` as well."""
    model = ModelKind.parse(model)
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("variance must be positive")
    if model is ModelKind.EGARCH11:
        return np.log(v) if isinstance(v, np.ndarray) else math.log(v)
    return v


def parse_theta(model: ModelKind, text: "str | Sequence[float] | ParamVector") -> ParamVector:
    """Parse ``"a,b,c[,d]"`` (or a sequence) into a validated ParamVector."""
    model = ModelKind.parse(model)
    if isinstance(text, ParamVector):
        return text.validate(model)
    if isinstance(text, str):
        values = [float(v) for v in text.replace(" ", "").split(",") if v]
    else:
        values = [float(v) for v in text]
    return ParamVector.from_array(model, values).validate(model)


def parse_box(model: ModelKind, text: "str | Sequence[Sequence[float]] | None", x=None) -> ParamBox:
    """Parse ``"lo:hi,lo:hi,..."`` or nested pairs; None gives the default box."""
    model = ModelKind.parse(model)
    if text is None:
        return ParamBox.default(model, x)
    if isinstance(text, ParamBox):
        return text
    if isinstance(text, dict):
        pairs = [text[n] for n in model.param_names]
    elif isinstance(text, str):
        pairs = [tuple(float(v) for v in part.split(":")) for part in text.replace(" ", "").split(",") if part]
    else:
        pairs = [tuple(p) for p in text]
    lower = tuple(p[0] for p in pairs)
    upper = tuple(p[-1] for p in pairs)
    return ParamBox(model, lower, upper)


def e_abs_normal() -> float:
    """``E|Z| = sqrt(2/pi)`` for a standard normal."""
    return math.sqrt(2.0 / math.pi)

