import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import explicit_residual_mediators, random_dataset, random_paths
from optmed.core_stats import (
    Dataset,
    SufficientStats,
    center_and_standardise,
    composite_summary,
    compute_sufficient_stats,
    evaluate_composite,
    path_coefficients,
)
from optmed.errors import (
    DegenerateComposite,
    DegenerateTreatment,
    InputError,
    NonFiniteInput,
    ZeroVarianceColumn,
)


def hand_dataset():
    X = np.array([[1.0], [0.0], [-1.0]])
    A = np.array([1.0, -2.0, 1.0])
    Y = np.array([1.0, 0.0, -1.0])
    return Dataset(X, A, Y, centred=True)


def test_centring_removes_column_means():
    d = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 0.0, 2.0]),
                np.array([0.0, 1.0, 0.0]))
    c = center_and_standardise(d)
    np.testing.assert_allclose(c.X[:, 0], [-1.0, 0.0, 1.0])
    assert c.centred and not c.standardised


def test_constant_treatment_is_rejected():
    d = Dataset(np.array([[1.0], [2.0], [3.0]]), np.full(3, 5.0), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ZeroVarianceColumn) as info:
        center_and_standardise(d)
    assert info.value.column == "A"


def test_constant_mediator_named_in_error():
    X = np.column_stack([[1.0, 2.0, 4.0], [7.0, 7.0, 7.0]])
    d = Dataset(X, np.array([1.0, 0.0, 2.0]), np.array([0.0, 1.0, 3.0]),
                feature_names=("il6", "crp"))
    with pytest.raises(ZeroVarianceColumn, match="crp"):
        center_and_standardise(d)


def test_standardise_uses_sample_sd():
    # centred column [-2, 0, 2] has sample sd 2
    d = Dataset(np.array([[2.0], [4.0], [6.0]]), np.array([1.0, 0.0, 2.0]),
                np.array([0.0, 1.0, 0.0]))
    c = center_and_standardise(d, standardise=True)
    np.testing.assert_allclose(c.X[:, 0], [-1.0, 0.0, 1.0])
    assert c.standardised


def test_hand_example_statistics():
    s = compute_sufficient_stats(hand_dataset())
    assert s.a[0] == 0.0
    assert s.aty == 0.0
    assert s.z[0] == pytest.approx(2.0)
    assert s.V[0, 0] == pytest.approx(2.0)
    assert s.norm_a2 == pytest.approx(6.0)


def test_hand_example_path_coefficients():
    c = path_coefficients(np.array([1.0]), compute_sufficient_stats(hand_dataset()))
    assert (c.alpha, c.beta, c.h) == (0.0, pytest.approx(1.0), 0.0)


def test_mediator_proportional_to_treatment_has_zero_residual_gram():
    rng = np.random.default_rng(1)
    A = rng.standard_normal(30)
    A -= A.mean()
    Y = rng.standard_normal(30)
    s = compute_sufficient_stats(Dataset((3.0 * A)[:, None], A, Y - Y.mean(), centred=True))
    assert abs(s.V[0, 0]) <= 1e-12 * 9.0 * float(A @ A)


@given(n=st.integers(8, 100), p=st.integers(1, 20), seed=st.integers(0, 2**32 - 1))
def test_residual_gram_matches_explicit_projection(n, p, seed):
    d = random_dataset(np.random.default_rng(seed), n, p)
    s = compute_sufficient_stats(d)
    Z = explicit_residual_mediators(d)
    np.testing.assert_allclose(s.V, Z.T @ Z, rtol=0, atol=1e-10 * max(1.0, np.abs(s.V).max()))
    np.testing.assert_allclose(s.z, Z.T @ d.Y, rtol=0, atol=1e-10 * max(1.0, np.abs(s.z).max()))
    assert s.norm_a2 > 0


@given(seed=st.integers(0, 2**32 - 1))
def test_quadratic_form_equals_projected_norm(seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, 50, 5)
    s = compute_sufficient_stats(d)
    w = rng.standard_normal(5)
    Zw = explicit_residual_mediators(d) @ w
    assert w @ s.V @ w == pytest.approx(Zw @ Zw, rel=1e-8)


def test_cross_product_views_recover_raw_products(rng):
    d = random_dataset(rng, 60, 4)
    s = compute_sufficient_stats(d)
    np.testing.assert_allclose(s.XtX, d.X.T @ d.X, atol=1e-10)
    np.testing.assert_allclose(s.XtY, d.X.T @ d.Y, atol=1e-10)
    assert s.tau == pytest.approx(float(d.A @ d.Y) / float(d.A @ d.A))


def test_path_coefficients_scale_invariance(rng):
    s = compute_sufficient_stats(random_dataset(rng, 80, 6))
    w = rng.standard_normal(6)
    c1, c7 = path_coefficients(w, s), path_coefficients(7.0 * w, s)
    assert c7.alpha == pytest.approx(7.0 * c1.alpha)
    assert c7.beta == pytest.approx(c1.beta / 7.0)
    assert c7.h == pytest.approx(c1.h)
    assert c1.h == c1.alpha * c1.beta


def test_direction_orthogonal_to_outcome_path_has_zero_beta(rng):
    s = compute_sufficient_stats(random_dataset(rng, 80, 6))
    w = rng.standard_normal(6)
    w -= (w @ s.z) / (s.z @ s.z) * s.z
    c = path_coefficients(w, s)
    assert abs(c.beta) < 1e-12 and abs(c.h) < 1e-12


def test_composite_in_treatment_span_is_degenerate():
    rng = np.random.default_rng(3)
    A = rng.standard_normal(20)
    A -= A.mean()
    X = np.column_stack([A, -2.0 * A])
    Y = rng.standard_normal(20)
    s = compute_sufficient_stats(Dataset(X, A, Y - Y.mean(), centred=True))
    with pytest.raises(DegenerateComposite):
        path_coefficients(np.array([1.0, 0.5]), s)


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 12))
def test_summary_and_raw_evaluation_agree(seed, p):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, 40 + 3 * p, p)
    w = rng.standard_normal(p)
    a, b = composite_summary(w, compute_sufficient_stats(d)), evaluate_composite(w, d)
    for field in ("r_ma", "r_mperp_y", "alpha", "beta", "h", "fstar", "tau"):
        assert getattr(a, field) == pytest.approx(getattr(b, field), rel=1e-9, abs=1e-12)


def test_treatment_echo_outcome_has_zero_residual_correlation(rng):
    d = random_dataset(rng, 50, 4)
    echo = Dataset(d.X, d.A, d.A.copy(), centred=True)
    for _ in range(5):
        m = evaluate_composite(rng.standard_normal(4), echo)
        assert abs(m.r_mperp_y) < 1e-12


def test_prop_mediated_flagged_when_total_effect_vanishes():
    c = path_coefficients(np.array([1.0]), compute_sufficient_stats(hand_dataset()))
    assert not c.prop_mediated_defined and np.isnan(c.prop_mediated)


def test_held_out_effect_shrinks_on_average():
    from optmed.primal import maxie_fit_primal

    rng = np.random.default_rng(11)
    train, test = [], []
    for _ in range(20):
        paths = random_paths(rng, 30, signal=0.4)
        d_tr = random_dataset(rng, 120, 30, paths=paths)
        d_te = random_dataset(rng, 120, 30, paths=paths)
        fit = maxie_fit_primal(compute_sufficient_stats(d_tr))
        train.append(fit.coef_plus.h)
        test.append(evaluate_composite(fit.w_plus, d_te).h)
    assert np.mean(test) < np.mean(train)


def test_dataset_rejects_non_finite_with_position():
    X = np.ones((4, 2))
    X[2, 1] = np.nan
    with pytest.raises(NonFiniteInput, match=r"\(2, 1\)"):
        Dataset(X, np.arange(4.0), np.arange(4.0))


def test_dataset_rejects_false_centred_flag():
    with pytest.raises(InputError, match="centred"):
        Dataset(np.ones((3, 1)) + np.arange(3.0)[:, None], np.array([1.0, -1, 0]),
                np.array([1.0, -1, 0]), centred=True)


def test_dataset_shape_checks():
    with pytest.raises(InputError):
        Dataset(np.ones((3, 2)), np.ones(4), np.ones(3))
    with pytest.raises(InputError):
        Dataset(np.ones((2, 2)), np.ones(2), np.ones(2))


def test_dataset_is_read_only(rng):
    d = random_dataset(rng, 10, 2)
    with pytest.raises(ValueError):
        d.X[0, 0] = 1.0


def test_zero_treatment_summary_rejected():
    with pytest.raises(DegenerateTreatment):
        SufficientStats(a=np.zeros(1), z=np.zeros(1), V=np.eye(1), norm_a2=0.0, aty=0.0,
                        norm_y2=1.0, n=5, p=1)
