import math

import numpy as np
from scipy import stats

Z95 = float(stats.norm.ppf(0.95))


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        return math.nan, math.nan
    if n == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))


def wilson_upper(k: int, n: int, z: float = Z95) -> float:
    """One-sided Wilson score upper bound for a binomial proportion."""
    if n <= 0:
        return 1.0
    p = k / n
    z2 = z * z
    centre = p + z2 / (2 * n)
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return min(1.0, (centre + half) / (1 + z2 / n))


def binomial_se(k: int, n: int) -> float:
    if n <= 0:
        return math.nan
    p = k / n
    return math.sqrt(p * (1 - p) / n)


def combined_se(*ses) -> float:
    return math.sqrt(sum(s * s for s in ses))
