"""Data model, centring, sufficient statistics and path coefficients.

Everything downstream (both solvers, the cosine test, the federated
coordinator) consumes the cross-product summaries in
:class:`SufficientStats`; the residualised mediator matrix
``Z = Q_A X`` is never formed here.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import (
    DegenerateComposite,
    DegenerateTreatment,
    InputError,
    NonFiniteInput,
    ZeroVarianceColumn,
)

# relative threshold for "numerically zero" quadratic forms and effects
DEGENERACY_TOL = 1e-12


def _frozen(arr, ndim):
    out = np.array(arr, dtype=float, copy=True)
    if out.ndim != ndim:
        raise InputError(f"expected a {ndim}-d array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def default_feature_names(p: int) -> tuple:
    return tuple(f"x{j}" for j in range(p))


@dataclass(frozen=True)
class Dataset:
    """Treatment ``A``, outcome ``Y`` and mediator matrix ``X`` (n x p)."""

    X: np.ndarray
    A: np.ndarray
    Y: np.ndarray
    centred: bool = False
    standardised: bool = False
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = _frozen(self.X, 2)
        A = _frozen(self.A, 1)
        Y = _frozen(self.Y, 1)
        n, p = X.shape
        if A.shape[0] != n or Y.shape[0] != n:
            raise InputError(f"row mismatch: X has {n}, A has {A.shape[0]}, Y has {Y.shape[0]}")
        if n < 3 or p < 1:
            raise InputError(f"need n >= 3 and p >= 1, got n={n}, p={p}")
        for name, arr in (("X", X), ("A", A), ("Y", Y)):
            if not np.all(np.isfinite(arr)):
                bad = np.argwhere(~np.isfinite(arr))[0]
                raise NonFiniteInput(f"non-finite entry in {name} at index {tuple(int(i) for i in bad)}")
        names = self.feature_names
        names = default_feature_names(p) if names is None else tuple(str(s) for s in names)
        if len(names) != p:
            raise InputError(f"{len(names)} feature names for {p} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", names)
        if self.centred:
            for name, arr in (("X", X), ("A", A), ("Y", Y)):
                scale = np.maximum(np.abs(arr).max(axis=0), 1.0)
                if np.any(np.abs(arr.mean(axis=0)) > 1e-10 * scale):
                    raise InputError(f"{name} flagged centred but has non-zero column means")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SufficientStats:
    """Cross-product summaries that determine estimation and testing.

    ``a = X'A``, ``z = X'Y - (A'Y/|A|^2) a`` and ``V = X'X - a a'/|A|^2``,
    all on centred data.
    """

    a: np.ndarray
    z: np.ndarray
    V: np.ndarray
    norm_a2: float
    aty: float
    norm_y2: float
    n: int
    p: int
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        if not self.norm_a2 > 0:
            raise DegenerateTreatment("treatment has zero norm after centring")
        object.__setattr__(self, "a", _frozen(self.a, 1))
        object.__setattr__(self, "z", _frozen(self.z, 1))
        V = _frozen(self.V, 2)
        if V.shape != (self.p, self.p):
            raise InputError(f"V has shape {V.shape}, expected ({self.p}, {self.p})")
        object.__setattr__(self, "V", V)

    @property
    def XtX(self) -> np.ndarray:
        return self.V + np.outer(self.a, self.a) / self.norm_a2

    @property
    def XtY(self) -> np.ndarray:
        return self.z + (self.aty / self.norm_a2) * self.a

    @property
    def tau(self) -> float:
        """Total effect ``A'Y/|A|^2``."""
        return self.aty / self.norm_a2

    @property
    def rss_outcome_on_treatment(self) -> float:
        return self.norm_y2 - self.aty**2 / self.norm_a2

    def metric_scale(self) -> float:
        """Average diagonal of ``V``; the natural scale for ``w'Vw`` at unit ``w``."""
        return float(np.trace(self.V)) / self.p

    def negate_outcome(self) -> "SufficientStats":
        return SufficientStats(
            a=self.a, z=-self.z, V=self.V, norm_a2=self.norm_a2, aty=-self.aty,
            norm_y2=self.norm_y2, n=self.n, p=self.p, feature_names=self.feature_names,
        )


@dataclass(frozen=True)
class PathCoefficients:
    alpha: float
    beta: float
    h: float
    tau: float
    prop_mediated: float
    prop_mediated_defined: bool

    @classmethod
    def from_products(cls, wa, wz, wvw, norm_a2, aty, tau_tol):
        alpha = wa / norm_a2
        beta = wz / wvw
        h = alpha * beta
        tau = aty / norm_a2
        defined = abs(tau) >= tau_tol
        return cls(
            alpha=float(alpha), beta=float(beta), h=float(h), tau=float(tau),
            prop_mediated=float(h / tau) if defined else float("nan"),
            prop_mediated_defined=bool(defined),
        )

    @classmethod
    def degenerate(cls, tau):
        return cls(0.0, 0.0, 0.0, float(tau), float("nan"), False)


@dataclass(frozen=True)
class MediationSummary:
    r_ma: float
    r_mperp_y: float
    tau: float
    alpha: float
    beta: float
    h: float
    fstar: float
    prop_mediated: float
    prop_mediated_defined: bool


def _tau_tolerance(norm_a2, norm_y2):
    # tau is measured in units of sd(Y)/sd(A)
    return DEGENERACY_TOL * np.sqrt(norm_y2 / norm_a2) if norm_y2 > 0 else 0.0


def center_and_standardise(raw: Dataset, standardise: bool = False) -> Dataset:
    """Remove column means; optionally scale mediators to unit sample sd.

    Centring happens first, then scaling with divisor ``n - 1``.  Constant
    columns (including a constant treatment or outcome) raise
    :class:`ZeroVarianceColumn`.
    """
    X = raw.X - raw.X.mean(axis=0)
    A = raw.A - raw.A.mean()
    Y = raw.Y - raw.Y.mean()

    def zero_var(centred, original):
        ref = np.linalg.norm(original, axis=0)
        return np.linalg.norm(centred, axis=0) <= DEGENERACY_TOL * ref

    if zero_var(A, raw.A):
        raise ZeroVarianceColumn("A")
    if zero_var(Y, raw.Y):
        raise ZeroVarianceColumn("Y")
    bad = np.flatnonzero(zero_var(X, raw.X))
    if bad.size:
        raise ZeroVarianceColumn(raw.feature_names[bad[0]])
    if standardise:
        X = X / X.std(axis=0, ddof=1)
    return Dataset(X, A, Y, centred=True, standardised=standardise or raw.standardised,
                   feature_names=raw.feature_names)


def stats_from_cross_products(XtX, XtA, XtY, AtA: float, AtY: float, YtY: float, n: int,
                              feature_names=None) -> SufficientStats:
    """Assemble ``(a, z, V)`` from centred cross-products."""
    XtX = np.asarray(XtX, dtype=float)
    a = np.asarray(XtA, dtype=float)
    norm_a2 = float(AtA)
    if not norm_a2 > 0:
        raise DegenerateTreatment("treatment vector is identically zero after centring")
    aty = float(AtY)
    XtX = 0.5 * (XtX + XtX.T)
    V = XtX - np.outer(a, a) / norm_a2
    z = np.asarray(XtY, dtype=float) - (aty / norm_a2) * a
    return SufficientStats(a=a, z=z, V=V, norm_a2=norm_a2, aty=aty, norm_y2=float(YtY),
                           n=int(n), p=a.size, feature_names=feature_names)


def compute_sufficient_stats(d: Dataset) -> SufficientStats:
    if not d.centred:
        raise InputError("sufficient statistics require centred data")
    X, A, Y = d.X, d.A, d.Y
    return stats_from_cross_products(X.T @ X, X.T @ A, X.T @ Y, A @ A, A @ Y, Y @ Y, d.n,
                                     d.feature_names)


def quadratic_tolerance(w, s: SufficientStats) -> float:
    return DEGENERACY_TOL * s.metric_scale() * float(w @ w)


def path_coefficients(w, s: SufficientStats) -> PathCoefficients:
    """OLS path coefficients of the composite ``Xw`` from the summaries."""
    w = np.asarray(w, dtype=float)
    wvw = float(w @ s.V @ w)
    if wvw <= quadratic_tolerance(w, s):
        raise DegenerateComposite("composite lies in the span of the treatment (w'Vw ~ 0)")
    return PathCoefficients.from_products(
        float(w @ s.a), float(w @ s.z), wvw, s.norm_a2, s.aty,
        _tau_tolerance(s.norm_a2, s.norm_y2),
    )


def composite_summary(w, s: SufficientStats) -> MediationSummary:
    """Mediation summary of ``Xw`` computed from the cross-product summaries."""
    w = np.asarray(w, dtype=float)
    coef = path_coefficients(w, s)
    wa, wz = float(w @ s.a), float(w @ s.z)
    wvw = float(w @ s.V @ w)
    wxxw = wvw + wa**2 / s.norm_a2
    r_ma = wa / np.sqrt(wxxw * s.norm_a2)
    r_my = wz / np.sqrt(wvw * s.norm_y2)
    return MediationSummary(
        r_ma=float(r_ma), r_mperp_y=float(r_my), tau=coef.tau, alpha=coef.alpha,
        beta=coef.beta, h=coef.h, fstar=float(r_ma * r_my),
        prop_mediated=coef.prop_mediated, prop_mediated_defined=coef.prop_mediated_defined,
    )


def evaluate_composite(w, d: Dataset) -> MediationSummary:
    """Evaluate composite ``M = Xw`` on (possibly held-out) centred data.

    Works on the raw arrays rather than the summaries, so it doubles as an
    independent check of :func:`composite_summary`.
    """
    if not d.centred:
        raise InputError("evaluate_composite requires centred data")
    w = np.asarray(w, dtype=float)
    M = d.X @ w
    A, Y = d.A, d.Y
    norm_a2 = float(A @ A)
    M_perp = M - A * (A @ M) / norm_a2
    mm = float(M_perp @ M_perp)
    if mm <= DEGENERACY_TOL * float(M @ M) or not np.any(M):
        raise DegenerateComposite("composite is constant or collinear with the treatment")
    r_ma = float(A @ M) / np.sqrt(norm_a2 * float(M @ M))
    norm_y2 = float(Y @ Y)
    r_my = float(M_perp @ Y) / np.sqrt(mm * norm_y2) if norm_y2 > 0 else 0.0
    coef = PathCoefficients.from_products(
        float(A @ M), float(M_perp @ Y), mm, norm_a2, float(A @ Y),
        _tau_tolerance(norm_a2, norm_y2),
    )
    return MediationSummary(
        r_ma=r_ma, r_mperp_y=float(r_my), tau=coef.tau, alpha=coef.alpha, beta=coef.beta,
        h=coef.h, fstar=float(r_ma * r_my), prop_mediated=coef.prop_mediated,
        prop_mediated_defined=coef.prop_mediated_defined,
    )


def as_stats(data) -> SufficientStats:
    """Accept either a Dataset (centred on the fly) or precomputed summaries."""
    if isinstance(data, SufficientStats):
        return data
    if not data.centred:
        data = center_and_standardise(data)
    return compute_sufficient_stats(data)
