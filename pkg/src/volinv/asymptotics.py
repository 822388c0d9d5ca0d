"""Asymptotic covariance of the QLIK estimator.

With ``B = E[grad g grad g^T]`` at ``theta0`` the sandwich reduces to
``P = B/2``, ``Q = (E Z^4 - 1) B / 4`` and ``V = (E Z^4 - 1) B^{-1}``.

For EGARCH(1,1), ``grad g_t = U_{t-1} + V_{t-1} grad g_{t-1}`` with
``U_t = (1, log sigma_t^2, Z_t, |Z_t|)`` and ``V_t = beta - (gamma Z_t + delta |Z_t|)/2``.
B is available three ways here:

* ``b_diag_closed_form``: closed-form diagonal in terms of ``E V``, ``E V^2``,
  ``E|Z| V`` and ``E|Z|``.
* ``b_matrix_mc``: Monte Carlo over parallel chains of the truncated series.
* ``b_matrix_moments``: the full matrix from the exact second-moment
  recursion of the linear state ``(log sigma^2, grad g)``.

For GARCH(1,1) B is ``E[(grad sigma^2 / sigma^2)(grad sigma^2 / sigma^2)^T]``,
estimated by Monte Carlo.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .models import InnovationDist, ModelKind, ParamVector, parse_theta

_SINGULAR_EPS = 1e-8
# smallest eigenvalue of B relative to the largest below which B counts as singular
_RANK_RTOL = 1e-12


class NearSingularError(ArithmeticError):
    pass


class LinearIndependenceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class InnovationMoments:
    e_absz: float
    e_z4: float
    e_v: float
    e_v2: float
    e_absz_v: float
    e_z2: float = 1.0

    def as_dict(self) -> dict:
        return {k: _json_float(v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class MMPrimeCheck:
    ok: bool
    margin: float
    fourth_moment_finite: bool

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        return {"ok": self.ok, "margin": self.margin, "fourth_moment_finite": self.fourth_moment_finite}


def _json_float(v):
    if v is None or math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def innovation_moments(theta0, dist: InnovationDist | None = None, tol: float = 1e-10) -> InnovationMoments:
    """Moments of ``Z`` and ``V = beta - (gamma Z + delta|Z|)/2`` by adaptive quadrature.

    ``e_z4`` is ``inf`` for Student-t innovations with ``nu <= 4``.
    """
    th = parse_theta(ModelKind.EGARCH11, theta0)
    dist = dist or InnovationDist.normal()
    b, g, d = th.beta, th.gamma, th.delta

    def v(z):
        return b - 0.5 * (g * z + d * abs(z))

    return InnovationMoments(
        e_absz=dist.abs_moment(),
        e_z4=dist.fourth_moment(),
        e_v=dist.expect(v, tol),
        e_v2=dist.expect(lambda z: v(z) ** 2, tol),
        e_absz_v=dist.expect(lambda z: abs(z) * v(z), tol),
        e_z2=dist.expect(lambda z: z * z, tol),
    )


def check_mm_prime(moments: InnovationMoments) -> MMPrimeCheck:
    """``E V^2 < 1`` and ``E Z^4 < inf``; the margin is ``1 - E V^2``."""
    finite = math.isfinite(moments.e_z4)
    margin = 1.0 - moments.e_v2
    return MMPrimeCheck(bool(finite and margin > 0), margin, finite)


def _guard(*denoms: float) -> None:
    if min(abs(x) for x in denoms) < _SINGULAR_EPS:
        raise NearSingularError("near-singular moments")


def _b11(v: float, w: float) -> float:
    return 2.0 * v / ((1.0 - w) * (1.0 - v)) + 1.0 / (1.0 - w)


def _b22_closed(b: float, v: float, w: float, c: float) -> float:
    q = 1.0 - b * b
    s = 1.0 - b * b * v
    six = (
        4.0 * w / (1.0 - w) * (b / ((1.0 - b) * q) * v / (1.0 - v) - 1.0 / ((1.0 - b) * q) * v * b / s)
        + 4.0 * b * v**3 / ((1.0 - b) * q * s) / (1.0 - w)
        + 2.0 / q * w / (1.0 - w) * (v / (1.0 - v) - v / s)
        + 2.0 / (1.0 - w) * v**3 / (q * s)
        + 2.0 / (1.0 - w) * v**2 * b / ((1.0 - b) * q)
        + w / (1.0 - w) / q
    )
    cross = v / ((1.0 - b) * (1.0 - v))
    return c * c * _b11(v, w) + 4.0 * six - 4.0 * c * cross


def _b22_exact(b: float, v: float, w: float, c: float) -> float:
    # E[Y^2] and E[D1 Y] for R' = V + bR, D1' = 1 + V D1, Y' = R + V Y, V independent of the state
    yy = (
        b * b * v * v * w + b * b * v * w + 2 * b * v**3 + b * v * v * w - 2 * b * v * v - 2 * b * v * w
        + b * w + 2 * v**4 - 2 * v**3 - 2 * v * v * w + v * w - w
    ) / ((b - 1) ** 2 * (b + 1) * (v - 1) * (w - 1) * (b * v - 1))
    dy = -v * (b * v + b * w + v * v - v - w - 1) / ((b - 1) * (v - 1) * (w - 1) * (b * v - 1))
    return c * c * _b11(v, w) - 4.0 * c * dy + 4.0 * yy


def b_diag_closed_form(theta0, moments: InnovationMoments, b22: str = "closed") -> np.ndarray:
    """Closed-form diagonal ``(B11, B22, B33, B44)`` for EGARCH(1,1).

    ``b22="closed"`` assembles B22 from the three-part decomposition with the
    six-term expectation and the cross term ``E[sum beta^{k-1} V ...] = EV/((1-beta)(1-EV))``.
    ``b22="exact"`` uses the exact second moments of the linear recursion
    instead; the cross term there is ``E[(sum prod V)(sum beta^{k-1} V prod V)]``.

    Raises NearSingularError when ``E V^2``, ``E V`` or ``beta^2 E V`` is within
    1e-8 of 1.
    """
    th = parse_theta(ModelKind.EGARCH11, theta0)
    b = th.beta
    v, w = moments.e_v, moments.e_v2
    _guard(1.0 - w, 1.0 - v, 1.0 - b * b * v, 1.0 - b * v, 1.0 - b)
    c = (th.alpha + 2.0 * b) / (1.0 - b)
    if b22 == "closed":
        d22 = _b22_closed(b, v, w, c)
    elif b22 == "exact":
        d22 = _b22_exact(b, v, w, c)
    else:
        raise ValueError("b22 must be 'closed' or 'exact'")
    ez2 = moments.e_z2
    b33 = ez2 / (1.0 - w)
    b44 = 2.0 * moments.e_absz * moments.e_absz_v / ((1.0 - v) * (1.0 - w)) + ez2 / (1.0 - w)
    return np.array([_b11(v, w), d22, b33, b44])


@dataclass(frozen=True)
class BEstimate:
    """Estimate of B with elementwise standard errors (zero when exact)."""

    B: np.ndarray
    se: np.ndarray
    m: int
    L: int
    tail_bound: float
    # mean of D1^2 after l series terms, with its standard error
    checkpoints: dict = field(default_factory=dict)


def _chain_se(acc: np.ndarray, acc2: np.ndarray, m: int) -> np.ndarray:
    # jackknife SE of a mean equals sd / sqrt(m)
    mean = acc / m
    var = np.maximum(acc2 / m - mean * mean, 0.0) * m / max(m - 1, 1)
    return np.sqrt(var / m)


def b_matrix_mc(
    theta0,
    dist: InnovationDist | None = None,
    m: int = 100_000,
    L: int = 400,
    seed: int = 0,
    checkpoints=(50, 100, 200),
    model=ModelKind.EGARCH11,
) -> BEstimate:
    """Monte Carlo estimate of B from ``m`` independent chains.

    EGARCH: each chain runs ``log sigma^2`` from ``alpha/(1-beta)`` for ``2L``
    steps and the gradient recursion from zero over the last ``L``, so the
    gradient is the series truncated after ``L`` terms and ``log sigma^2`` its
    moving average truncated after at least ``L`` terms. The tail bound is
    ``(E V^2)^L``. GARCH: the same layout on ``(sigma^2, grad sigma^2)``; the
    tail bound is ``beta^L``.
    """
    model = ModelKind.parse(model)
    dist = dist or InnovationDist.normal()
    th = parse_theta(model, theta0)
    gen = rng.stream(seed, purpose=rng.B_MATRIX)
    if model is ModelKind.GARCH11:
        return _garch_b_mc(th, dist, m, L, gen)

    a, b, g, d = th.alpha, th.beta, th.gamma, th.delta
    h = np.full(m, a / (1.0 - b))
    for _ in range(L):
        z = dist.sample(gen, m)
        h = a + b * h + g * z + d * np.abs(z)
    grad = np.zeros((4, m))
    marks = {}
    wanted = set(int(c) for c in checkpoints if 0 < int(c) <= L)
    for step in range(1, L + 1):
        z = dist.sample(gen, m)
        az = np.abs(z)
        v = b - 0.5 * (g * z + d * az)
        grad *= v
        grad[0] += 1.0
        grad[1] += h
        grad[2] += z
        grad[3] += az
        h = a + b * h + g * z + d * az
        if step in wanted:
            sq = grad[0] ** 2
            marks[step] = (float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(m)))
    B, se = _outer_mean(grad)
    ev2 = dist.expect(lambda z: (b - 0.5 * (g * z + d * abs(z))) ** 2)
    return BEstimate(B, se, m, L, float(ev2**L), marks)


def _outer_mean(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k, m = grad.shape
    B = grad @ grad.T / m
    acc2 = np.einsum("im,jm->ij", grad**2, grad**2)
    se = _chain_se(B * m, acc2, m)
    return 0.5 * (B + B.T), se


def _garch_b_mc(th: ParamVector, dist, m, L, gen) -> BEstimate:
    a, b, g = th.alpha, th.beta, th.gamma
    s0 = a / (1.0 - b - g) if b + g < 1 else a / (1.0 - b)
    s = np.full(m, s0)
    for _ in range(L):
        z = dist.sample(gen, m)
        s = a + (b + g * z * z) * s
    grad = np.zeros((3, m))
    for _ in range(L):
        z = dist.sample(gen, m)
        x2 = s * z * z
        grad *= b
        grad[0] += 1.0
        grad[1] += s
        grad[2] += x2
        s = a + b * s + g * x2
    B, se = _outer_mean(grad / s)
    return BEstimate(B, se, m, L, float(b**L), {})


def b_matrix_moments(theta0, dist: InnovationDist | None = None) -> np.ndarray:
    """Exact B for EGARCH(1,1) from the second moments of a linear recursion.

    The state ``eta = (log sigma^2, grad g)`` satisfies ``eta' = a(Z) + A(Z) eta``
    with ``a`` and ``A`` linear in ``(1, Z, |Z|)`` and ``Z`` independent of
    ``eta``, so the stationary mean and second moment solve linear systems.
    Requires ``E V^2 < 1``.
    """
    th = parse_theta(ModelKind.EGARCH11, theta0)
    dist = dist or InnovationDist.normal()
    basis = [lambda z: 1.0, lambda z: z, abs]
    mu = np.array([dist.expect(f) for f in basis])
    M = np.array([[dist.expect(lambda z, f=f, h=h: f(z) * h(z)) for h in basis] for f in basis])

    vc = (th.beta, -0.5 * th.gamma, -0.5 * th.delta)
    avec = np.zeros((3, 5))
    amat = np.zeros((3, 5, 5))
    avec[:, 0] = (th.alpha, th.gamma, th.delta)
    amat[0, 0, 0] = th.beta
    avec[0, 1] = 1.0
    amat[0, 2, 0] = 1.0
    avec[1, 3] = 1.0
    avec[2, 4] = 1.0
    for i in range(3):
        for j in range(1, 5):
            amat[i, j, j] = vc[i]

    a_bar = np.tensordot(mu, avec, 1)
    A_bar = np.tensordot(mu, amat, 1)
    mean = np.linalg.solve(np.eye(5) - A_bar, a_bar)
    C = np.zeros((5, 5))
    K = np.zeros((25, 25))
    for i in range(3):
        for j in range(3):
            C += M[i, j] * (np.outer(avec[i], avec[j]) + np.outer(avec[i], amat[j] @ mean)
                            + np.outer(amat[i] @ mean, avec[j]))
            K += M[i, j] * np.kron(amat[i], amat[j])
    if max(abs(np.linalg.eigvals(K))) >= 1.0:
        raise NearSingularError("second moments of the gradient do not exist (E V^2 >= 1)")
    S = np.linalg.solve(np.eye(25) - K, C.ravel()).reshape(5, 5)
    B = S[1:, 1:]
    return 0.5 * (B + B.T)


@dataclass(frozen=True)
class AsymptoticReport:
    B: np.ndarray
    B_diag_closed: np.ndarray | None
    P: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    se: np.ndarray
    mm_prime_ok: bool
    trunc_tail_bound: float | None
    n: int
    e_z4: float
    B_se: np.ndarray | None = None
    theta0: ParamVector | None = None
    model: ModelKind = ModelKind.EGARCH11
    sandwich_residual: float = 0.0

    def as_dict(self) -> dict:
        def mat(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "model": self.model.value,
            "theta0": None if self.theta0 is None else self.theta0.as_dict(),
            "n": self.n,
            "e_z4": _json_float(self.e_z4),
            "mm_prime_ok": self.mm_prime_ok,
            "trunc_tail_bound": _json_float(self.trunc_tail_bound),
            "B": mat(self.B),
            "B_se": mat(self.B_se),
            "B_diag_closed": mat(self.B_diag_closed),
            "P": mat(self.P),
            "Q": mat(self.Q),
            "V": mat(self.V),
            "se": mat(self.se),
            "sandwich_residual": self.sandwich_residual,
        }


def asymptotic_variance(
    B,
    e_z4: float,
    n: int,
    *,
    B_diag_closed=None,
    B_se=None,
    mm_prime_ok: bool = True,
    trunc_tail_bound: float | None = None,
    theta0: ParamVector | None = None,
    model=ModelKind.EGARCH11,
) -> AsymptoticReport:
    """Sandwich pieces and ``se_i = sqrt(V_ii / n)``.

    Raises LinearIndependenceError when B is not positive definite.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    if not (math.isfinite(e_z4) and e_z4 > 1.0):
        raise ValueError(f"need 1 < E Z^4 < inf, got {e_z4}")
    if n < 1:
        raise ValueError("n must be positive")
    B = 0.5 * (B + B.T)
    try:
        chol = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise LinearIndependenceError("LI violated or MC noise: B is not positive definite") from None
    eig = np.linalg.eigvalsh(B)
    if eig[0] <= _RANK_RTOL * eig[-1]:
        raise LinearIndependenceError(f"LI violated or MC noise: B is numerically singular (eigenvalues {eig[0]:.3g}, {eig[-1]:.3g})")
    k = B.shape[0]
    eye = np.eye(k)
    B_inv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    B_inv = 0.5 * (B_inv + B_inv.T)
    P = B / 2.0
    Q = (e_z4 - 1.0) * B / 4.0
    V = (e_z4 - 1.0) * B_inv
    P_inv = np.linalg.inv(P)
    resid = float(np.linalg.norm(P_inv @ Q @ P_inv - V) / max(1.0, np.linalg.norm(V)))
    se = np.sqrt(np.diag(V) / n)
    return AsymptoticReport(
        B=B,
        B_diag_closed=None if B_diag_closed is None else np.asarray(B_diag_closed, dtype=float),
        P=P,
        Q=Q,
        V=V,
        se=se,
        mm_prime_ok=bool(mm_prime_ok),
        trunc_tail_bound=trunc_tail_bound,
        n=int(n),
        e_z4=float(e_z4),
        B_se=None if B_se is None else np.asarray(B_se, dtype=float),
        theta0=theta0,
        model=ModelKind.parse(model),
        sandwich_residual=resid,
    )


def asymptotic_report(
    model,
    theta0,
    dist: InnovationDist | None = None,
    n: int = 1,
    m: int = 100_000,
    L: int = 400,
    seed: int = 0,
    b22: str = "closed",
) -> AsymptoticReport:
    """B by Monte Carlo, closed-form diagonal (EGARCH) and the sandwich at ``theta0``."""
    model = ModelKind.parse(model)
    dist = dist or InnovationDist.normal()
    th = parse_theta(model, theta0)
    e_z4 = dist.fourth_moment()
    closed = None
    if model is ModelKind.EGARCH11:
        mom = innovation_moments(th, dist)
        ok = bool(check_mm_prime(mom))
        if ok:
            closed = b_diag_closed_form(th, mom, b22)
    else:
        ok = math.isfinite(e_z4)
    est = b_matrix_mc(th, dist, m=m, L=L, seed=seed, checkpoints=(), model=model)
    return asymptotic_variance(
        est.B,
        e_z4,
        n,
        B_diag_closed=closed,
        B_se=est.se,
        mm_prime_ok=ok,
        trunc_tail_bound=est.tail_bound,
        theta0=th,
        model=model,
    )


def write_report_json(report: AsymptoticReport, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report: AsymptoticReport, filename) -> None:
    """One row per parameter: theta0, closed-form and MC diagonal of B, MC SE, asymptotic SE."""
    names = report.model.param_names
    theta = report.theta0.as_array() if report.theta0 is not None else [math.nan] * len(names)
    diag = np.diag(report.B)
    diag_se = np.diag(report.B_se) if report.B_se is not None else [math.nan] * len(names)
    closed = report.B_diag_closed if report.B_diag_closed is not None else [math.nan] * len(names)
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "theta0", "b_diag_closed", "b_diag_mc", "b_diag_mc_se", "se"])
        for i, name in enumerate(names):
            w.writerow([name] + [f"{val:.17g}" for val in (theta[i], closed[i], diag[i], diag_se[i], report.se[i])])
