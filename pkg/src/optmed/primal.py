"""Closed-form MaxIE solver for the n > p regime.

The indirect effect factorises as path strength times alignment, and the
alignment is maximised by the V-metric bisector of ``p = V^-1 a`` and
``q = V^-1 z``.  One Cholesky factorisation serves both solves and both
the concordant and suppression solutions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core_stats import (
    DEGENERACY_TOL,
    PathCoefficients,
    SufficientStats,
    path_coefficients,
    quadratic_tolerance,
)
from .errors import DegenerateComposite, DegeneratePath, FactorisationFailure, RegimeUnsupported

DEFAULT_RIDGE = 1e-10
# 1 +/- cos(phi) below this means the bisector direction has collapsed
BISECTOR_TOL = 1e-10


@dataclass(frozen=True)
class PathGeometry:
    pvec: np.ndarray
    qvec: np.ndarray
    norm_p: float
    norm_q: float
    cos_phi: float
    ridge: float


@dataclass(frozen=True)
class MediatorFit:
    w_plus: np.ndarray
    w_minus: np.ndarray
    coef_plus: PathCoefficients
    coef_minus: PathCoefficients
    cos_phi: float
    path_strength: float
    regime: str
    effect_type_plus: str
    effect_type_minus: str
    # PathGeometry (primal) or DualGeometry (dual) the fit was built from
    geometry: object = None


def path_vectors(s: SufficientStats, ridge_scale: float = DEFAULT_RIDGE) -> PathGeometry:
    """Solve ``(V + eps I) x = a`` and ``= z`` with a single factorisation."""
    if s.p > s.n - 2:
        # centring and residualising on A leave rank(V) <= n - 2
        raise RegimeUnsupported(f"primal solver needs p <= n - 2 (got n={s.n}, p={s.p}); use the dual")
    eps = ridge_scale * s.metric_scale()
    M = s.V + eps * np.eye(s.p)
    try:
        factor = linalg.cho_factor(M, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise FactorisationFailure(f"V + eps*I is not positive definite: {exc}") from exc
    pvec = linalg.cho_solve(factor, s.a)
    qvec = linalg.cho_solve(factor, s.z)
    ap = max(float(s.a @ pvec), 0.0)
    zq = max(float(s.z @ qvec), 0.0)
    norm_p, norm_q = np.sqrt(ap), np.sqrt(zq)
    if norm_p > 0 and norm_q > 0:
        cos_phi = float(np.clip((s.a @ qvec) / (norm_p * norm_q), -1.0, 1.0))
    else:
        cos_phi = 0.0
    return PathGeometry(pvec, qvec, float(norm_p), float(norm_q), cos_phi, float(eps))


def path_is_degenerate(s: SufficientStats) -> tuple[bool, bool]:
    """Flag an empty treatment path (a ~ 0) or outcome path (z ~ 0).

    Scales come from Cauchy-Schwarz: ``|a_j| <= |X_j| |A|`` and
    ``|z_j| <= |Z_j| |Y|``.
    """
    tr_v = float(np.trace(s.V))
    a_scale = np.sqrt((tr_v + float(s.a @ s.a) / s.norm_a2) * s.norm_a2)
    z_scale = np.sqrt(tr_v * s.norm_y2)
    return (
        float(np.linalg.norm(s.a)) <= DEGENERACY_TOL * a_scale,
        float(np.linalg.norm(s.z)) <= DEGENERACY_TOL * z_scale,
    )


def effect_type(coef: PathCoefficients) -> str:
    if coef.beta > 0:
        return "concordant"
    if coef.beta < 0:
        return "suppression"
    return "degenerate"


def orient(w, coef: PathCoefficients):
    """Flip ``w`` so that alpha >= 0 (ties broken by beta >= 0)."""
    if coef.alpha < 0 or (coef.alpha == 0 and coef.beta < 0):
        return -w, PathCoefficients(
            alpha=-coef.alpha, beta=-coef.beta, h=coef.h, tau=coef.tau,
            prop_mediated=coef.prop_mediated, prop_mediated_defined=coef.prop_mediated_defined,
        )
    return w, coef


def _unit(w):
    return w / np.linalg.norm(w)


def maxie_fit_primal(s: SufficientStats, ridge_scale: float = DEFAULT_RIDGE,
                     geometry: PathGeometry | None = None) -> MediatorFit:
    """Globally optimal concordant and suppression composites.

    ``w+`` is proportional to ``p/|p|_V + q/|q|_V``; ``w-`` uses ``-q``.
    A bisector that collapses (cos phi = -1 for ``w+``, +1 for ``w-``) is
    reported with zero weights and effect type ``"degenerate"``.
    """
    a_empty, z_empty = path_is_degenerate(s)
    if a_empty or z_empty:
        which = "treatment" if a_empty else "outcome"
        raise DegeneratePath(f"the {which} path is empty; no composite mediator to fit")
    g = geometry if geometry is not None else path_vectors(s, ridge_scale)
    if g.norm_p <= 0 or g.norm_q <= 0:
        raise DegeneratePath("a path vector has zero V-norm")
    up, uq = g.pvec / g.norm_p, g.qvec / g.norm_q
    strength = g.norm_p * g.norm_q / s.norm_a2

    results = []
    for sign in (1.0, -1.0):
        if 1.0 + sign * g.cos_phi <= BISECTOR_TOL:
            results.append((np.zeros(s.p), PathCoefficients.degenerate(s.tau), "degenerate"))
            continue
        w = _unit(up + sign * uq)
        try:
            coef = path_coefficients(w, s)
        except DegenerateComposite:
            results.append((np.zeros(s.p), PathCoefficients.degenerate(s.tau), "degenerate"))
            continue
        w, coef = orient(w, coef)
        results.append((w, coef, effect_type(coef)))
    (wp, cp, tp), (wm, cm, tm) = results
    return MediatorFit(
        w_plus=wp, w_minus=wm, coef_plus=cp, coef_minus=cm, cos_phi=g.cos_phi,
        path_strength=float(strength), regime="primal",
        effect_type_plus=tp, effect_type_minus=tm, geometry=g,
    )


def alignment(w, g: PathGeometry, s: SufficientStats) -> float:
    """``cos<w,p>_V * cos<w,q>_V``; multiply by path strength to get h(w)."""
    w = np.asarray(w, dtype=float)
    wvw = float(w @ s.V @ w)
    if wvw <= quadratic_tolerance(w, s):
        raise DegenerateComposite("w'Vw is numerically zero")
    return float((w @ s.a) * (w @ s.z) / (wvw * g.norm_p * g.norm_q))


def v_cosine(u, v, V) -> float:
    """Cosine of the angle between ``u`` and ``v`` in the ``V`` inner product."""
    return float(u @ V @ v / np.sqrt((u @ V @ u) * (v @ V @ v)))
