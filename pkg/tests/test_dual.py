import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import explicit_residual_mediators, random_dataset
from optmed.core_stats import Dataset, compute_sufficient_stats, path_coefficients
from optmed.dual import (
    DualPrecursor,
    dual_path_vectors,
    dual_statistics,
    maxie_fit_dual,
    select_regime,
)
from optmed.errors import ZeroKernel
from optmed.primal import path_vectors


def precursor(K_Z, a_tilde, z_tilde):
    n = len(a_tilde)
    return DualPrecursor(np.asarray(a_tilde, float), np.asarray(z_tilde, float), np.eye(n),
                         np.asarray(K_Z, float), np.ones(n), np.zeros(n), float(n))


def test_kernel_statistics_match_explicit_formulas(rng):
    d = random_dataset(rng, 12, 30)
    pre = dual_statistics(d)
    K = d.X @ d.X.T
    Q = np.eye(d.n) - np.outer(d.A, d.A) / (d.A @ d.A)
    np.testing.assert_allclose(pre.a_tilde, K @ d.A, atol=1e-10)
    np.testing.assert_allclose(pre.z_tilde, K @ Q @ d.Y, atol=1e-10)
    np.testing.assert_allclose(pre.K_Z, Q @ K @ Q, atol=1e-10)


def test_identity_kernel_passes_statistics_through():
    # X X' = I cannot hold for centred X, so feed the kernel directly
    A = np.array([1.0, -2.0, 0.5, 0.5])
    Y = np.array([0.3, 1.0, -0.7, 2.0])
    y_perp = Y - A * (A @ Y) / (A @ A)
    Q = np.eye(4) - np.outer(A, A) / (A @ A)
    g = dual_path_vectors(precursor(Q, A, y_perp))
    np.testing.assert_allclose(g.q_tilde, y_perp, atol=1e-12)
    assert g.rank_kz == 3


def test_residual_kernel_annihilates_treatment(rng):
    pre = dual_statistics(random_dataset(rng, 25, 60))
    assert np.abs(pre.K_Z @ pre.A).max() <= 1e-10 * np.abs(pre.K_Z).max()


def test_residual_kernel_matches_explicit_projection(rng):
    d = random_dataset(rng, 30, 100)
    Z = explicit_residual_mediators(d)
    pre = dual_statistics(d)
    assert np.abs(pre.K_Z - Z @ Z.T).max() <= 1e-9
    np.testing.assert_allclose(pre.K_Z, pre.K_Z.T, atol=0)
    assert np.linalg.eigvalsh(pre.K_Z).min() >= -1e-9 * np.abs(pre.K_Z).max()


def test_diagonal_pseudoinverse():
    g = dual_path_vectors(precursor(np.diag([2.0, 0.0]), [4.0, 0.0], [1.0, 0.0]))
    np.testing.assert_allclose(g.p_tilde, [2.0, 0.0])
    assert g.rank_kz == 1


def test_null_space_component_is_ignored():
    K_Z = np.diag([3.0, 1.0, 0.0])
    g1 = dual_path_vectors(precursor(K_Z, [1.0, 2.0, 0.0], [0.5, -1.0, 0.0]))
    g2 = dual_path_vectors(precursor(K_Z, [1.0, 2.0, 0.0], [0.5, -1.0, 7.0]))
    np.testing.assert_array_equal(g1.q_tilde, g2.q_tilde)


def test_zero_kernel_rejected():
    with pytest.raises(ZeroKernel):
        dual_path_vectors(precursor(np.zeros((3, 3)), [1.0, 0, 0], [0, 1.0, 0]))


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(2, 30))
def test_dual_angle_equals_primal_angle(seed, p):
    d = random_dataset(np.random.default_rng(seed), p + 15, p)
    primal = path_vectors(compute_sufficient_stats(d), ridge_scale=0.0)
    dual = dual_path_vectors(dual_statistics(d))
    assert abs(primal.cos_phi - dual.cos_phi) <= 1e-9


def test_dual_weights_agree_with_primal_on_tall_data(rng):
    from optmed.primal import maxie_fit_primal

    d = random_dataset(rng, 80, 10)
    fp = maxie_fit_primal(compute_sufficient_stats(d), ridge_scale=0.0)
    fd = maxie_fit_dual(d)
    np.testing.assert_allclose(fd.w_plus, fp.w_plus, atol=1e-8)
    np.testing.assert_allclose(fd.w_minus, fp.w_minus, atol=1e-8)
    assert fd.path_strength == pytest.approx(fp.path_strength, rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_recovered_weight_reproduces_bisector_value(seed):
    d = random_dataset(np.random.default_rng(seed), 40, 200, signal=1.0)
    fit = maxie_fit_dual(d)
    s = compute_sufficient_stats(d)
    S, c = fit.path_strength, fit.cos_phi
    assert path_coefficients(fit.w_plus, s).h == pytest.approx(S * (1 + c) / 2, rel=1e-6)
    assert path_coefficients(fit.w_minus, s).h == pytest.approx(-S * (1 - c) / 2, rel=1e-6)
    assert fit.regime == "dual"


def test_residual_kernel_rank_is_n_minus_two(rng):
    g = dual_path_vectors(dual_statistics(random_dataset(rng, 40, 200)))
    assert g.rank_kz == 38


def test_negating_outcome_swaps_composites(rng):
    d = random_dataset(rng, 40, 120)
    f1 = maxie_fit_dual(d)
    f2 = maxie_fit_dual(Dataset(d.X, d.A, -d.Y, centred=True))
    assert f2.coef_plus.h == pytest.approx(-f1.coef_minus.h, rel=1e-8)
    assert f2.coef_minus.h == pytest.approx(-f1.coef_plus.h, rel=1e-8)


def test_dual_path_vectors_settle_as_mediators_are_added():
    # fixed (A, Y); the treatment path direction stabilises as p grows
    rng = np.random.default_rng(8)
    n = 40
    A = rng.standard_normal(n)
    Y = 0.4 * A + rng.standard_normal(n)
    medians = []
    for p in (20, 80):
        angles = []
        for _ in range(20):
            X1 = 0.3 * np.outer(A, np.ones(p)) + rng.standard_normal((n, p))
            X8 = np.column_stack([X1, 0.3 * np.outer(A, np.ones(7 * p))
                                  + rng.standard_normal((n, 7 * p))])
            u = [dual_path_vectors(dual_statistics(
                Dataset(X, A, Y))).p_tilde for X in (X1, X8)]
            c = abs(u[0] @ u[1]) / (np.linalg.norm(u[0]) * np.linalg.norm(u[1]))
            angles.append(np.arccos(min(c, 1.0)))
        medians.append(np.median(angles))
    assert medians[1] < medians[0]


@pytest.mark.parametrize("n,p,expected", [(200, 20, "primal"), (40, 200, "dual"),
                                          (100, 100, "dual"), (100, 99, "dual"),
                                          (100, 98, "primal")])
def test_select_regime(n, p, expected):
    assert select_regime(n, p) == expected
