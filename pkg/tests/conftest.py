import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from optmed.core_stats import Dataset, center_and_standardise, compute_sufficient_stats

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance criteria append (label, passed, detail) here
ACCEPTANCE_LINES: list = []


def random_paths(rng, p, signal=0.6, overlap=0.5):
    alpha = rng.standard_normal(p)
    beta = overlap * alpha + np.sqrt(1 - overlap**2) * rng.standard_normal(p)
    return signal * alpha / np.linalg.norm(alpha), signal * beta / np.linalg.norm(beta)


def random_dataset(rng, n, p, signal=0.6, rho=0.3, overlap=0.5, tau=0.25, centred=True,
                   paths=None):
    """Correlated mediators with partly shared treatment and outcome paths."""
    idx = np.arange(p)
    L = np.linalg.cholesky(rho ** np.abs(idx[:, None] - idx[None, :]))
    X = rng.standard_normal((n, p)) @ L.T
    alpha, beta = paths if paths is not None else random_paths(rng, p, signal, overlap)
    A = X @ alpha + 0.5 * rng.standard_normal(n)
    Y = X @ beta + tau * A + 0.5 * rng.standard_normal(n)
    d = Dataset(X + 1.5, A - 0.7, Y + 2.0)
    return center_and_standardise(d) if centred else d


def random_stats(rng, n, p, **kw):
    return compute_sufficient_stats(random_dataset(rng, n, p, **kw))


def explicit_residual_mediators(d):
    """Z = Q_A X by forming the projector explicitly."""
    A = d.A[:, None]
    Q = np.eye(d.n) - A @ A.T / float(d.A @ d.A)
    return Q @ d.X


def h_of(w, s):
    wvw = w @ s.V @ w
    return (w @ s.a) * (w @ s.z) / (s.norm_a2 * wvw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in ACCEPTANCE_LINES:
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{status:<9} {label}: {detail}")
