"""Kernel (dual) form of MaxIE for p >= n.

Works with the n x n kernel ``K_Z = Q_A X X' Q_A``.  The dual path vectors
``K_Z^+ K A`` and ``K_Z^+ K Q_A Y`` equal ``Z p`` and ``Z q``, so their
Euclidean angle is the primal V-metric angle and the primal weight is
recovered in the row space of ``Z``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_stats import DEGENERACY_TOL, Dataset, PathCoefficients, center_and_standardise
from .core_stats import _tau_tolerance
from .errors import DegeneratePath, ZeroKernel
from .primal import BISECTOR_TOL, MediatorFit, effect_type, orient

EIG_CUTOFF = 1e-10


@dataclass(frozen=True)
class DualPrecursor:
    a_tilde: np.ndarray
    z_tilde: np.ndarray
    K: np.ndarray
    K_Z: np.ndarray
    A: np.ndarray
    Y_perp: np.ndarray
    norm_a2: float


@dataclass(frozen=True)
class DualGeometry:
    a_tilde: np.ndarray
    z_tilde: np.ndarray
    p_tilde: np.ndarray
    q_tilde: np.ndarray
    cos_phi: float
    rank_kz: int
    eig_cutoff: float
    # eigenpairs of K_Z kept above the cutoff; reused for weight recovery
    eigvals: np.ndarray
    eigvecs: np.ndarray


def select_regime(n: int, p: int) -> str:
    """``"primal"`` when V can be non-singular, otherwise ``"dual"``.

    After centring and residualising on the treatment, V has rank at most
    n - 2, so the primal form is used only for p <= n - 2.
    """
    return "primal" if p <= n - 2 else "dual"


def _project_out(v, A, norm_a2):
    return v - A * (A @ v) / norm_a2


def dual_statistics(d: Dataset) -> DualPrecursor:
    if not d.centred:
        d = center_and_standardise(d)
    X, A, Y = d.X, d.A, d.Y
    norm_a2 = float(A @ A)
    K = X @ X.T
    K = 0.5 * (K + K.T)
    y_perp = _project_out(Y, A, norm_a2)
    a_tilde = K @ A
    z_tilde = K @ y_perp
    # Q K Q without forming Q
    KQ = K - np.outer(a_tilde, A) / norm_a2
    K_Z = KQ - np.outer(A, A @ KQ) / norm_a2
    K_Z = 0.5 * (K_Z + K_Z.T)
    return DualPrecursor(a_tilde, z_tilde, K, K_Z, A, y_perp, norm_a2)


def dual_path_vectors(pre: DualPrecursor, eig_cutoff: float = EIG_CUTOFF) -> DualGeometry:
    lam, U = np.linalg.eigh(pre.K_Z)
    lam_max = lam[-1] if lam.size else 0.0
    if not lam_max > 0:
        raise ZeroKernel("residual kernel K_Z is identically zero")
    keep = lam > eig_cutoff * lam_max
    lam, U = lam[keep], U[:, keep]
    p_tilde = U @ ((U.T @ pre.a_tilde) / lam)
    q_tilde = U @ ((U.T @ pre.z_tilde) / lam)
    np_, nq = np.linalg.norm(p_tilde), np.linalg.norm(q_tilde)
    cos_phi = float(np.clip(p_tilde @ q_tilde / (np_ * nq), -1.0, 1.0)) if np_ > 0 and nq > 0 else 0.0
    return DualGeometry(pre.a_tilde, pre.z_tilde, p_tilde, q_tilde, cos_phi,
                        int(keep.sum()), eig_cutoff, lam, U)


def maxie_fit_dual(d: Dataset, eig_cutoff: float = EIG_CUTOFF) -> MediatorFit:
    """Dual MaxIE.  ``fit.geometry`` holds the :class:`DualGeometry`."""
    if not d.centred:
        d = center_and_standardise(d)
    pre = dual_statistics(d)
    g = dual_path_vectors(pre, eig_cutoff)
    X, A = d.X, d.A
    norm_a2 = pre.norm_a2
    norm_y2 = float(d.Y @ d.Y)

    norm_pt, norm_qt = float(np.linalg.norm(g.p_tilde)), float(np.linalg.norm(g.q_tilde))
    # a path is empty when its statistic has no component in range(K_Z)
    k_scale = float(np.linalg.norm(pre.K))
    if np.linalg.norm(g.eigvecs.T @ g.a_tilde) <= DEGENERACY_TOL * k_scale * np.sqrt(norm_a2):
        raise DegeneratePath("the treatment path is empty in the dual")
    if np.linalg.norm(g.eigvecs.T @ g.z_tilde) <= DEGENERACY_TOL * k_scale * np.linalg.norm(pre.Y_perp):
        raise DegeneratePath("the outcome path is empty in the dual")
    up, uq = g.p_tilde / norm_pt, g.q_tilde / norm_qt
    tau = float(A @ d.Y) / norm_a2
    tau_tol = _tau_tolerance(norm_a2, norm_y2)

    results = []
    for sign in (1.0, -1.0):
        if 1.0 + sign * g.cos_phi <= BISECTOR_TOL:
            results.append((np.zeros(d.p), PathCoefficients.degenerate(tau), "degenerate"))
            continue
        b = up + sign * uq
        u = g.eigvecs @ ((g.eigvecs.T @ b) / g.eigvals)
        # w = Z'u with Z = Q_A X; u is orthogonal to A so Q_A u = u
        w = X.T @ _project_out(u, A, norm_a2)
        w = w / np.linalg.norm(w)
        M = X @ w
        M_perp = _project_out(M, A, norm_a2)
        coef = PathCoefficients.from_products(
            float(A @ M), float(M_perp @ d.Y), float(M_perp @ M_perp), norm_a2,
            float(A @ d.Y), tau_tol,
        )
        w, coef = orient(w, coef)
        results.append((w, coef, effect_type(coef)))
    (wp, cp, tp), (wm, cm, tm) = results
    return MediatorFit(
        w_plus=wp, w_minus=wm, coef_plus=cp, coef_minus=cm, cos_phi=g.cos_phi,
        path_strength=norm_pt * norm_qt / norm_a2, regime="dual",
        effect_type_plus=tp, effect_type_minus=tm, geometry=g,
    )
