"""Cosine global test, intersection-union baseline and analytic power."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from . import special
from .core_stats import as_stats
from .errors import FactorisationFailure, InsufficientDf, InvalidCosine, SingularMetric, ZeroPathVector


@dataclass(frozen=True)
class CosineTest:
    cos_phi: float
    T: float
    df: int
    p_two_sided: float
    p_concordant: float
    p_suppression: float
    regime: str


@dataclass(frozen=True)
class PowerResult:
    phi0: float
    df: int
    delta: float
    alpha_level: float
    power: float
    detectable: bool


@dataclass(frozen=True)
class BetaCheck:
    ks_statistic: float
    ks_pvalue: float
    sample_mean: float
    theoretical_mean: float
    n_samples: int


@dataclass(frozen=True)
class IUTResult:
    p_alpha: float
    p_beta: float
    p_value: float
    df_alpha: tuple
    df_beta: tuple


def cosine_df(regime: str, n: int, p: int) -> int:
    """Degrees of freedom of the cosine test: p - 1 (primal) or n - 2 (dual)."""
    return p - 1 if regime == "primal" else n - 2


def cosine_test(cos_phi: float, df: int, regime: str = "primal") -> CosineTest:
    """Signed t test of the path-angle cosine.

    ``T = cos(phi) sqrt(df / (1 - cos^2 phi))``.  Large positive T points
    to concordant mediation, so ``p_concordant`` is the upper tail.
    """
    if not abs(cos_phi) <= 1 + 1e-9:
        raise InvalidCosine(f"|cos phi| = {abs(cos_phi)} exceeds 1")
    if df < 1:
        raise InsufficientDf(f"cosine test needs df >= 1, got {df}")
    c = float(np.clip(cos_phi, -1.0, 1.0))
    if abs(c) == 1.0:
        T = np.copysign(np.inf, c)
    else:
        T = c * np.sqrt(df / (1.0 - c * c))
    p_conc = float(special.t_sf(T, df))
    p_supp = float(special.t_cdf(T, df))
    return CosineTest(cos_phi=c, T=float(T), df=int(df),
                      p_two_sided=float(min(1.0, 2.0 * min(p_conc, p_supp))),
                      p_concordant=p_conc, p_suppression=p_supp, regime=regime)


def null_beta_check(cos2_samples, p: int) -> BetaCheck:
    """KS comparison of squared cosines with their Beta(1/2, (p-1)/2) null law."""
    x = np.asarray(cos2_samples, dtype=float)
    a, b = 0.5, (p - 1) / 2.0
    d = special.ks_statistic(x, lambda t: special.beta_cdf(t, a, b))
    return BetaCheck(ks_statistic=d, ks_pvalue=special.ks_pvalue(d, x.size),
                     sample_mean=float(x.mean()), theoretical_mean=1.0 / p, n_samples=x.size)


def iut_test(data, adjust_treatment: bool = False) -> IUTResult:
    """Intersection-union test: both single-path F tests must reject.

    ``p_alpha`` is the omnibus F of A on X (df p, n-p-1).  ``p_beta`` tests
    ``R^2(Y ~ Z) = 0`` with ``Z = Q_A X``: Y is regressed on Z alone, so its
    residual keeps the treatment's share (df p, n-p-1).  With
    ``adjust_treatment=True`` the residual is taken from Y on (A, Z)
    instead (df p, n-p-2).  Both come straight from the summaries via
    ``a'V^-1 a`` and ``z'V^-1 z``.
    """
    s = as_stats(data)
    n, p = s.n, s.p
    if n <= p + 2:
        raise InsufficientDf(f"IUT needs n > p + 2 (n={n}, p={p})")
    try:
        factor = linalg.cho_factor(s.V, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorisationFailure(f"V is not positive definite: {exc}") from exc
    c_a = float(s.a @ linalg.cho_solve(factor, s.a))
    c_z = float(s.z @ linalg.cho_solve(factor, s.z))
    # R^2 of A on X via Sherman-Morrison on X'X = V + aa'/|A|^2
    r2_a = c_a / (s.norm_a2 + c_a)
    df1a, df2a = p, n - p - 1
    f_a = (r2_a / df1a) / ((1.0 - r2_a) / df2a)
    if adjust_treatment:
        rss, df2b = s.rss_outcome_on_treatment - c_z, n - p - 2
    else:
        rss, df2b = s.norm_y2 - c_z, n - p - 1
    df1b = p
    f_b = (c_z / df1b) / (rss / df2b)
    p_a = float(stats.f.sf(f_a, df1a, df2a))
    p_b = float(stats.f.sf(f_b, df1b, df2b))
    return IUTResult(p_alpha=p_a, p_beta=p_b, p_value=max(p_a, p_b),
                     df_alpha=(df1a, df2a), df_beta=(df1b, df2b))


def noncentrality(phi0: float, df: int) -> float:
    """``cot(phi0) * sqrt(df)``; zero exactly at a right angle."""
    if np.isclose(phi0, np.pi / 2, rtol=0, atol=1e-15):
        return 0.0
    return float(np.sqrt(df) / np.tan(phi0))


def noncentrality_primal(phi0: float, p: int) -> float:
    return noncentrality(phi0, p - 1)


def noncentrality_dual(phi0: float, n: int) -> float:
    return noncentrality(phi0, n - 2)


def power_noncentral_t(delta: float, df: int, alpha_level: float = 0.05,
                       phi0: float = float("nan")) -> PowerResult:
    """Two-sided power ``P(|t(df, delta)| >= t_{1-alpha/2, df})``."""
    crit = float(special.t_quantile(1.0 - alpha_level / 2.0, df))
    if delta == 0:
        power = alpha_level
    else:
        power = float(1.0 - special.noncentral_t_cdf(crit, df, delta)
                      + special.noncentral_t_cdf(-crit, df, delta))
    return PowerResult(phi0=phi0, df=int(df), delta=float(delta), alpha_level=alpha_level,
                       power=power, detectable=bool(abs(delta) > crit))


def power_at_angle(phi0: float, df: int, alpha_level: float = 0.05) -> PowerResult:
    return power_noncentral_t(noncentrality(phi0, df), df, alpha_level, phi0=phi0)


def population_angle(alpha0, beta0, sigma_z) -> float:
    """Angle between the population paths in the ``Sigma_Z^-1`` metric."""
    alpha0 = np.asarray(alpha0, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if not np.any(alpha0) or not np.any(beta0):
        raise ZeroPathVector("population path vector is zero")
    try:
        factor = linalg.cho_factor(np.asarray(sigma_z, dtype=float), lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMetric(f"Sigma_Z is not positive definite: {exc}") from exc
    ia = linalg.cho_solve(factor, alpha0)
    ib = linalg.cho_solve(factor, beta0)
    c = (alpha0 @ ib) / np.sqrt((alpha0 @ ia) * (beta0 @ ib))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
