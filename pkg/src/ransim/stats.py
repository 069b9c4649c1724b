"""Order statistics and summary helpers used by the experiment drivers."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def percentile(samples, p: float) -> float:
    """Nearest-rank percentile: the ``ceil(p/100 * n)``-th smallest sample.

    Uses a partial selection rather than a full sort. The rank is computed in
    exact arithmetic so that e.g. p=7, n=100 gives rank 7, not 8.
    """
    a = np.asarray(samples, dtype=float).ravel()
    n = a.size
    if n == 0:
        raise ValueError("percentile of an empty sample")
    if not 0 < p <= 100:
        raise ValueError("p must be in (0, 100]")
    k = max(math.ceil(Fraction(p) * n / 100) - 1, 0)
    return float(np.partition(a, k)[k])


def mean_and_stderr(values) -> tuple[float, float | None]:
    """Sample mean and standard error; the error is None for a single value."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    if v.size < 2:
        return float(v.mean()), None
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
