"""Single-path OLS baselines and the multi-restart numerical oracle.

The oracle maximises h or f* directly with L-BFGS-B from random starts on
the unit sphere.  Both objectives are scale-invariant, so their Euclidean
gradient is already tangent to the sphere at ``w``; each evaluation maps
``x -> x/|x|`` and projects, which removes the flat radial direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .core_stats import SufficientStats, as_stats
from .errors import FactorisationFailure, RegimeUnsupported
from .primal import DEFAULT_RIDGE


def _solve_gram(M, rhs, ridge_scale):
    eps = ridge_scale * float(np.trace(M)) / M.shape[0]
    try:
        factor = linalg.cho_factor(M + eps * np.eye(M.shape[0]), lower=True)
    except linalg.LinAlgError as exc:
        raise FactorisationFailure(f"X'X is not positive definite: {exc}") from exc
    return linalg.cho_solve(factor, rhs)


def reg_y_on_x(data, ridge_scale: float = DEFAULT_RIDGE) -> np.ndarray:
    """OLS of Y on X: the composite most correlated with the outcome."""
    s = as_stats(data)
    if s.p >= s.n:
        raise RegimeUnsupported("regression baselines need n > p")
    return _solve_gram(s.XtX, s.XtY, ridge_scale)


def reg_a_on_x(data, ridge_scale: float = DEFAULT_RIDGE) -> np.ndarray:
    """OLS of A on X: the composite most correlated with the treatment."""
    s = as_stats(data)
    if s.p >= s.n:
        raise RegimeUnsupported("regression baselines need n > p")
    return _solve_gram(s.XtX, s.a, ridge_scale)


# objectives and their Euclidean gradients -----------------------------------

def h_and_grad(w, s: SufficientStats):
    Vw = s.V @ w
    wa, wz, wvw = w @ s.a, w @ s.z, w @ Vw
    h = wa * wz / (s.norm_a2 * wvw)
    grad = (wz * s.a + wa * s.z) / (s.norm_a2 * wvw) - 2.0 * h * Vw / wvw
    return float(h), grad


def fstar_and_grad(w, s: SufficientStats):
    Vw = s.V @ w
    wa, wz, wvw = w @ s.a, w @ s.z, w @ Vw
    wxxw = wvw + wa * wa / s.norm_a2
    den = np.sqrt(wxxw * s.norm_a2 * wvw * s.norm_y2)
    f = wa * wz / den
    d_wxxw = 2.0 * Vw + 2.0 * wa * s.a / s.norm_a2
    grad = (wz * s.a + wa * s.z) / den - f * (d_wxxw / (2.0 * wxxw) + Vw / wvw)
    return float(f), grad


OBJECTIVES = {"h": h_and_grad, "fstar": fstar_and_grad}


def gradient_check(fun, w, step=1e-6) -> float:
    """Relative error between the analytic gradient and central differences."""
    _, g = fun(w)
    h = step * np.linalg.norm(w)
    fd = np.empty_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        fd[j] = (fun(w + e)[0] - fun(w - e)[0]) / (2.0 * h)
    return float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), np.finfo(float).tiny))


@dataclass(frozen=True)
class OracleConfig:
    restarts: int = 10
    max_iter: int = 1000
    grad_tol: float = 1e-10
    seed: int = 0
    grad_check_points: int = 5

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class OracleResult:
    w: np.ndarray
    value: float
    converged: bool
    n_converged: int
    grad_check_error: float
    evaluations: int


def numerical_oracle(s: SufficientStats, objective: str = "h",
                     cfg: OracleConfig = OracleConfig()) -> OracleResult:
    """Best of ``cfg.restarts`` L-BFGS-B ascents of ``objective`` on the sphere.

    Each restart draws its start from its own child of
    ``SeedSequence(cfg.seed)``, so results do not depend on the order the
    restarts are run in.  ``grad_check_error`` is the worst relative
    analytic-vs-finite-difference gradient discrepancy over
    ``cfg.grad_check_points`` random directions.
    """
    if s.p > s.n - 2:
        raise RegimeUnsupported("the numerical oracle works on the primal summaries (p <= n - 2)")
    base = OBJECTIVES[objective]

    def fun(w):
        return base(w, s)

    def neg(x):
        nx = np.linalg.norm(x)
        u = x / nx
        f, g = fun(u)
        g_sphere = (g - (g @ u) * u) / nx
        return -f, -g_sphere

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts + 1)
    check_rng = np.random.default_rng(children[-1])
    grad_err = 0.0
    for _ in range(cfg.grad_check_points):
        grad_err = max(grad_err, gradient_check(fun, check_rng.standard_normal(s.p)))

    best_w, best_val, n_conv, evals = None, -np.inf, 0, 0
    for child in children[:-1]:
        x0 = np.random.default_rng(child).standard_normal(s.p)
        x0 /= np.linalg.norm(x0)
        res = optimize.minimize(neg, x0, jac=True, method="L-BFGS-B",
                                options={"maxiter": cfg.max_iter, "gtol": cfg.grad_tol})
        evals += res.nfev
        n_conv += bool(res.success)
        val = -float(res.fun)
        if val > best_val:
            best_val, best_w = val, res.x / np.linalg.norm(res.x)
    if best_w @ s.a < 0:
        best_w = -best_w
    return OracleResult(w=best_w, value=float(best_val), converged=n_conv > 0,
                        n_converged=n_conv, grad_check_error=grad_err, evaluations=evals)
