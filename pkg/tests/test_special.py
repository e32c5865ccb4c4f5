"""Distribution functions against independent quadrature oracles."""
import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaln, ndtr

from optmed import special


def t_pdf(x, df):
    logc = gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * np.log(df * np.pi)
    return np.exp(logc - (df + 1) / 2 * np.log1p(x * x / df))


def t_cdf_oracle(x, df):
    # integrate from the centre to keep the interval finite
    half, _ = integrate.quad(t_pdf, 0.0, abs(x), args=(df,), epsabs=1e-14, epsrel=1e-13)
    return 0.5 + np.sign(x) * half


def nct_cdf_oracle(x, df, delta):
    # P(Z + delta <= x sqrt(V/df)), V ~ chi2(df): average over V
    def chi2_pdf(v):
        return np.exp((df / 2 - 1) * np.log(v) - v / 2 - (df / 2) * np.log(2) - gammaln(df / 2))

    val, _ = integrate.quad(lambda v: chi2_pdf(v) * ndtr(x * np.sqrt(v / df) - delta),
                            0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
    return val


@pytest.mark.parametrize("x,df", [(0.0, 3), (1.0, 3), (-2.5, 7), (4.0, 38), (12.0, 99),
                                  (-0.3, 1), (2.0, 2915)])
def test_t_cdf(x, df):
    assert special.t_cdf(x, df) == pytest.approx(t_cdf_oracle(x, df), abs=1e-10)
    assert special.t_sf(x, df) == pytest.approx(1.0 - t_cdf_oracle(x, df), abs=1e-10)


@pytest.mark.parametrize("prob,df", [(0.975, 38), (0.5, 5), (0.995, 99), (0.025, 3)])
def test_t_quantile_inverts_cdf(prob, df):
    q = special.t_quantile(prob, df)
    assert t_cdf_oracle(q, df) == pytest.approx(prob, abs=1e-10)


@pytest.mark.parametrize("x,df,delta", [(2.02, 38, 3.56), (-2.02, 38, 3.56), (1.0, 10, -0.5),
                                        (2.02, 39, 0.46), (0.0, 5, 1.0)])
def test_noncentral_t_cdf(x, df, delta):
    assert special.noncentral_t_cdf(x, df, delta) == pytest.approx(
        nct_cdf_oracle(x, df, delta), abs=1e-6)


def test_noncentral_reduces_to_central():
    assert special.noncentral_t_cdf(1.3, 9, 0.0) == special.t_cdf(1.3, 9)


def test_beta_cdf_special_cases():
    # Beta(1/2, 1/2) is the arcsine law
    x = 0.3
    assert special.beta_cdf(x, 0.5, 0.5) == pytest.approx(2 / np.pi * np.arcsin(np.sqrt(x)))
    assert special.beta_cdf(-1.0, 0.5, 3.0) == 0.0
    assert special.beta_cdf(2.0, 0.5, 3.0) == 1.0


def test_ks_statistic_single_sample():
    assert special.ks_statistic([0.3], lambda t: t) == pytest.approx(0.7)


def test_ks_statistic_on_a_perfect_grid():
    n = 100
    x = (np.arange(n) + 0.5) / n
    assert special.ks_statistic(x, lambda t: t) == pytest.approx(0.5 / n)


def test_ks_pvalue_limits():
    assert special.ks_pvalue(0.0, 50) == pytest.approx(1.0)
    assert special.ks_pvalue(0.5, 200) < 1e-20
