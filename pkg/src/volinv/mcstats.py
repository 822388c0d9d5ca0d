"""Standard errors for Monte Carlo and time averages."""

from __future__ import annotations

import math

import numpy as np


def iid_se(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def batch_means_se(values: np.ndarray, n_batches: int | None = None) -> float:
    """Standard error of the mean of a serially dependent series.

    Non-overlapping batch means with ``floor(sqrt(n))`` batches by default.
    Falls back to the iid formula below 16 observations.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 16:
        return iid_se(values)
    k = n_batches or int(math.isqrt(n))
    k = max(2, min(k, n // 2))
    b = n // k
    means = values[: k * b].reshape(k, b).mean(axis=1)
    # variance of a batch mean times b estimates the long-run variance
    long_run_var = b * float(np.var(means, ddof=1))
    return math.sqrt(long_run_var / n)
