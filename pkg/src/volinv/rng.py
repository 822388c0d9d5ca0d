"""Seeded random streams.

Every random draw in the package comes from a Philox4x64-10 counter-based
generator (numpy's ``Philox`` bit generator wrapped in a ``Generator``).
The 128-bit Philox key is set directly, with no seed hashing:

    key = [seed XOR replication, purpose]

and the counter starts at zero. Replication ``r`` of a study therefore uses
key word ``seed ^ r``, and the purpose word keeps the streams used for
different jobs (simulation, optimizer starts, Monte Carlo integrals) disjoint
even when they share a seed. Philox is a keyed bijection of the counter, so
distinct keys give independent streams and the same key gives the same bits
on every platform.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# purpose words
SIMULATE = 0
STATIONARITY = 1
LYAPUNOV = 2
B_MATRIX = 3
STARTS = 4
MOMENTS = 5


def stream(seed: int, replication: int = 0, purpose: int = SIMULATE) -> np.random.Generator:
    """Return the generator for ``(seed, replication, purpose)``."""
    word0 = (int(seed) ^ int(replication)) & MASK64
    key = np.array([word0, int(purpose) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
