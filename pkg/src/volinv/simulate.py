"""Sample paths of the two models from a seeded Philox stream."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import _kernels, rng
from .mcstats import iid_se
from .models import DomainError, InnovationDist, ModelKind, ParamVector, parse_theta

DEFAULT_BURN_IN = 2000


class StationarityError(DomainError):
    """GARCH(1,1) parameter outside the strict-stationarity region."""


@dataclass(frozen=True)
class Path:
    """Observations ``x`` with the latent variances and innovations when simulated."""

    x: np.ndarray
    sigma2: np.ndarray | None = None
    z: np.ndarray | None = None
    seed: int | None = None
    model: ModelKind | None = None
    theta0: ParamVector | None = None

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def head(self, n: int) -> "Path":
        return Path(
            self.x[:n],
            None if self.sigma2 is None else self.sigma2[:n],
            None if self.z is None else self.z[:n],
            self.seed,
            self.model,
            self.theta0,
        )


def recommended_burn_in(beta: float) -> int:
    """Steps after which the start value is forgotten to 1e-12 at rate beta."""
    if beta <= 0:
        return 1000
    return max(1000, math.ceil(math.log(1e-12) / math.log(beta)))


def stationarity_lyapunov(
    theta0, dist: InnovationDist | None = None, m: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of ``log(beta + gamma Z**2)`` (GARCH only)."""
    th = parse_theta(ModelKind.GARCH11, theta0)
    dist = dist or InnovationDist.normal()
    if th.gamma == 0.0:
        return (math.log(th.beta) if th.beta > 0 else -math.inf), 0.0
    z = dist.sample(rng.stream(seed, purpose=rng.STATIONARITY), m)
    with np.errstate(divide="ignore"):
        terms = np.log(th.beta + th.gamma * z * z)
    return float(np.mean(terms)), iid_se(terms)


def simulate(
    model,
    theta0,
    dist: InnovationDist | None = None,
    n: int = 1000,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
) -> Path:
    """Simulate ``n`` observations after discarding ``burn_in`` steps.

    The recursion starts from ``alpha/(1-beta)`` (EGARCH, on log sigma^2) or
    from ``alpha/(1-beta-gamma)`` (GARCH; ``alpha/(1-beta)`` when
    ``beta + gamma >= 1``). All ``burn_in + n`` innovations are drawn in one
    call, so a shorter path with the same seed is a prefix of a longer one.
    """
    model = ModelKind.parse(model)
    th = parse_theta(model, theta0)
    dist = dist or InnovationDist.normal()
    if n < 1 or burn_in < 1:
        raise ValueError("n and burn_in must be positive")
    if model is ModelKind.GARCH11:
        lyap, _ = stationarity_lyapunov(th, dist, seed=seed)
        if lyap >= 0:
            raise StationarityError(
                f"E log(beta + gamma Z^2) estimated at {lyap:.4g} >= 0: no stationary solution for {th}"
            )
    total = burn_in + n
    z = dist.sample(rng.stream(seed, purpose=rng.SIMULATE), total)
    if model is ModelKind.EGARCH11:
        h = _kernels.egarch_simulate(th.alpha, th.beta, th.gamma, th.delta, z, th.floor)
        sigma2 = np.exp(h)
    else:
        if th.beta + th.gamma < 1:
            s0 = th.alpha / (1.0 - th.beta - th.gamma)
        else:
            s0 = th.alpha / (1.0 - th.beta)
        sigma2 = _kernels.garch_simulate(th.alpha, th.beta, th.gamma, z, s0)
    sigma2 = sigma2[burn_in:]
    z = z[burn_in:]
    x = np.sqrt(sigma2) * z
    return Path(x=x, sigma2=sigma2, z=z, seed=seed, model=model, theta0=th)


def write_path_csv(path: Path, filename) -> None:
    """Write ``t,x,sigma2`` with 17 significant digits (sigma2 empty if unknown)."""
    with open(filename, "w", newline="") as fh:
        fh.write("t,x,sigma2\n")
        s2 = path.sigma2
        for t in range(len(path)):
            s = "" if s2 is None else f"{s2[t]:.17g}"
            fh.write(f"{t + 1},{path.x[t]:.17g},{s}\n")


class CsvFormatError(ValueError):
    pass


def read_path_csv(filename) -> Path:
    """Read a CSV with an ``x`` column (and optionally ``sigma2``).

    Non-numeric or missing values raise CsvFormatError naming the line numbers.
    """
    filename = FsPath(filename)
    with open(filename, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{filename}: empty file") from None
        if "x" not in header:
            raise CsvFormatError(f"{filename}: no 'x' column in header {header}")
        ix = header.index("x")
        is2 = header.index("sigma2") if "sigma2" in header else None
        xs, s2s, bad = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                v = float(row[ix])
                if not math.isfinite(v):
                    raise ValueError
            except (ValueError, IndexError):
                bad.append(lineno)
                continue
            xs.append(v)
            if is2 is not None:
                try:
                    s2s.append(float(row[is2]))
                except (ValueError, IndexError):
                    s2s.append(math.nan)
    if bad:
        shown = ", ".join(str(b) for b in bad[:20])
        more = "" if len(bad) <= 20 else f" (+{len(bad) - 20} more)"
        raise CsvFormatError(f"{filename}: non-numeric x on line(s) {shown}{more}")
    if not xs:
        raise CsvFormatError(f"{filename}: no data rows")
    sigma2 = None
    if is2 is not None and s2s and not any(math.isnan(v) for v in s2s):
        sigma2 = np.array(s2s)
    return Path(x=np.array(xs), sigma2=sigma2)
