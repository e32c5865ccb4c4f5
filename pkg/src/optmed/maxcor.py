"""MaxCor: maximise the mediation index f*(w) = cor(Xw, A) cor(Zw, Y).

f* depends on ``w`` only through ``w'a``, ``w'z`` and ``w'Vw``, and for
fixed linear forms it decreases in ``w'Vw``; the minimum-``w'Vw`` point
with given ``w'a, w'z`` lies in span{V^-1 a, V^-1 z}.  So the search is
over one angle in a V-orthonormal basis of that plane: a coarse grid
locates the peak and a bounded Brent search polishes it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core_stats import SufficientStats
from .errors import DegeneratePath, RegimeUnsupported
from .primal import DEFAULT_RIDGE, PathGeometry, path_is_degenerate, path_vectors

GRID_SIZE = 512
THETA_TOL = 1e-10
MAX_ITER = 200


@dataclass(frozen=True)
class MaxCorFit:
    w: np.ndarray
    fstar: float
    theta: float
    converged: bool


def mediation_index(w, s: SufficientStats) -> float:
    """f*(w) from the summaries."""
    w = np.asarray(w, dtype=float)
    wa, wz = float(w @ s.a), float(w @ s.z)
    wvw = float(w @ s.V @ w)
    wxxw = wvw + wa * wa / s.norm_a2
    return wa * wz / np.sqrt(wxxw * s.norm_a2 * wvw * s.norm_y2)


def _basis(g: PathGeometry):
    e1 = g.pvec / g.norm_p
    uq = g.qvec / g.norm_q
    sin_phi = np.sqrt(max(1.0 - g.cos_phi**2, 0.0))
    e2 = (uq - g.cos_phi * e1) / sin_phi
    return e1, e2


def maxcor_fit(s: SufficientStats, ridge_scale: float = DEFAULT_RIDGE,
               geometry: PathGeometry | None = None, verify: bool = False) -> MaxCorFit:
    """Maximise f* over the plane of the two path vectors.

    With ``verify=True`` the result is compared against the multi-restart
    numerical oracle; if the oracle beats it by more than 1e-4 the oracle's
    answer is returned with ``converged=False``.
    """
    if s.p > s.n - 2:
        raise RegimeUnsupported("MaxCor has no dual form; it needs p <= n - 2")
    a_empty, z_empty = path_is_degenerate(s)
    if a_empty or z_empty:
        raise DegeneratePath("a mediation path is empty; f* is identically zero")
    g = geometry if geometry is not None else path_vectors(s, ridge_scale)

    if 1.0 - abs(g.cos_phi) <= 1e-10:
        # collinear paths: the plane collapses to a line
        w, theta, converged = g.pvec.copy(), 0.0, True
    else:
        e1, e2 = _basis(g)
        B = np.column_stack([e1, e2])
        a2, z2, G = B.T @ s.a, B.T @ s.z, B.T @ s.V @ B

        def neg_f(theta):
            u = np.array([np.cos(theta), np.sin(theta)])
            wa, wz, wvw = u @ a2, u @ z2, u @ G @ u
            return -wa * wz / np.sqrt((wvw + wa * wa / s.norm_a2) * s.norm_a2 * wvw * s.norm_y2)

        grid = np.linspace(0.0, np.pi, GRID_SIZE, endpoint=False)
        vals = np.array([neg_f(t) for t in grid])
        i = int(np.argmin(vals))
        step = grid[1] - grid[0]
        res = optimize.minimize_scalar(
            neg_f, bounds=(grid[i] - step, grid[i] + step), method="bounded",
            options={"xatol": THETA_TOL, "maxiter": MAX_ITER},
        )
        theta = float(res.x) % np.pi
        converged = bool(res.success)
        w = np.cos(theta) * e1 + np.sin(theta) * e2
    w = w / np.linalg.norm(w)
    if w @ s.a < 0:
        w = -w
    fit = MaxCorFit(w=w, fstar=float(mediation_index(w, s)), theta=theta, converged=converged)

    if verify:
        from .baselines import OracleConfig, numerical_oracle

        oracle = numerical_oracle(s, "fstar", OracleConfig())
        if oracle.value > fit.fstar + 1e-4:
            w = oracle.w if oracle.w @ s.a >= 0 else -oracle.w
            return MaxCorFit(w=w, fstar=oracle.value, theta=float("nan"), converged=False)
    return fit
