"""One-call estimation and testing in whichever regime the data allow."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core_stats import Dataset, MediationSummary, SufficientStats, center_and_standardise
from .core_stats import composite_summary, compute_sufficient_stats, evaluate_composite
from .dual import maxie_fit_dual, select_regime
from .errors import DegeneratePath, InsufficientDf, RegimeUnsupported
from .inference import CosineTest, IUTResult, cosine_df, cosine_test, iut_test
from .maxcor import MaxCorFit, maxcor_fit
from .primal import DEFAULT_RIDGE, MediatorFit, maxie_fit_primal, path_vectors


@dataclass(frozen=True)
class Analysis:
    regime: str
    n: int
    p: int
    fit: Optional[MediatorFit]
    maxcor: Optional[MaxCorFit]
    summary: Optional[MediationSummary]
    test: CosineTest
    iut: Optional[IUTResult]
    iut_note: Optional[str]
    degenerate: Optional[str]


def _null_test(df, regime):
    # cos(phi) = 0 carries no evidence whatever the df
    return CosineTest(cos_phi=0.0, T=0.0, df=int(df), p_two_sided=1.0,
                      p_concordant=0.5, p_suppression=0.5, regime=regime)


def _run_iut(s):
    try:
        return iut_test(s), None
    except InsufficientDf as exc:
        return None, f"unavailable: {exc}"


def analyse_stats(s: SufficientStats, ridge_scale: float = DEFAULT_RIDGE, iut: bool = False,
                  df_override: Optional[int] = None) -> Analysis:
    """Primal analysis from summaries alone (the federated path)."""
    if select_regime(s.n, s.p) != "primal":
        raise RegimeUnsupported(
            f"p={s.p} >= n-1={s.n - 1}: summaries only support the primal solver; "
            "the dual needs individual-level data")
    df = df_override if df_override is not None else cosine_df("primal", s.n, s.p)
    iut_res, iut_note = _run_iut(s) if iut else (None, None)
    g = path_vectors(s, ridge_scale)
    try:
        fit = maxie_fit_primal(s, geometry=g)
    except DegeneratePath as exc:
        return Analysis("primal", s.n, s.p, None, None, None, _null_test(df, "primal"),
                        iut_res, iut_note, str(exc))
    mc = maxcor_fit(s, geometry=g)
    summary = composite_summary(fit.w_plus, s) if fit.effect_type_plus != "degenerate" else None
    test = cosine_test(fit.cos_phi, df, "primal") if df >= 1 else _null_test(df, "primal")
    return Analysis("primal", s.n, s.p, fit, mc, summary, test, iut_res, iut_note, None)


def analyse(d: Dataset, regime: str = "auto", ridge_scale: float = DEFAULT_RIDGE,
            iut: bool = False, df_override: Optional[int] = None,
            standardise: bool = False) -> Analysis:
    """Fit MaxIE (and MaxCor in the primal), run the cosine test.

    ``regime="auto"`` picks the primal form when p <= n - 2.  Asking for the
    primal on wide data raises :class:`RegimeUnsupported`.
    """
    if not d.centred or (standardise and not d.standardised):
        d = center_and_standardise(d, standardise=standardise)
    chosen = select_regime(d.n, d.p) if regime == "auto" else regime
    if chosen == "primal":
        if select_regime(d.n, d.p) != "primal":
            raise RegimeUnsupported(
                f"primal regime requested but p={d.p} >= n-1={d.n - 1}; use --regime dual")
        return analyse_stats(compute_sufficient_stats(d), ridge_scale, iut, df_override)
    if chosen != "dual":
        raise ValueError(f"unknown regime {regime!r}")
    df = df_override if df_override is not None else cosine_df("dual", d.n, d.p)
    if iut:
        iut_res, iut_note = _run_iut(compute_sufficient_stats(d)) if d.n > d.p + 2 \
            else (None, f"unavailable: IUT needs n > p + 2 (n={d.n}, p={d.p})")
    else:
        iut_res, iut_note = None, None
    try:
        fit = maxie_fit_dual(d)
    except DegeneratePath as exc:
        return Analysis("dual", d.n, d.p, None, None, None, _null_test(df, "dual"),
                        iut_res, iut_note, str(exc))
    summary = evaluate_composite(fit.w_plus, d) if fit.effect_type_plus != "degenerate" else None
    return Analysis("dual", d.n, d.p, fit, None, summary, cosine_test(fit.cos_phi, df, "dual"),
                    iut_res, iut_note, None)
