"""Distribution functions used by the tests of mediation.

Thin wrappers over ``scipy.special`` so the rest of the package has one
place to look; accuracy is pinned by quadrature oracles in the test-suite.
"""
from __future__ import annotations

import numpy as np
from scipy import special, stats


def t_cdf(x, df):
    return special.stdtr(df, x)


def t_sf(x, df):
    return special.stdtr(df, -np.asarray(x, dtype=float))


def t_quantile(prob, df):
    return special.stdtrit(df, prob)


def noncentral_t_cdf(x, df, delta):
    if np.all(np.asarray(delta) == 0):
        return t_cdf(x, df)
    return stats.nct.cdf(x, df, delta)


def beta_cdf(x, a, b):
    return special.betainc(a, b, np.clip(x, 0.0, 1.0))


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_pvalue(statistic: float, n: int) -> float:
    return float(stats.kstwo.sf(statistic, n))
