import numpy as np
import pytest

from optmed import simulate as sm
from optmed.core_stats import Dataset
from optmed.simulate import SimConfig


def test_identical_paths_when_supports_fully_shared():
    m = sm.make_scenario_paths("S4", 20, np.random.default_rng(0))
    np.testing.assert_array_equal(m.alpha, m.beta)
    assert np.linalg.norm(m.alpha) == pytest.approx(1.0)


def test_disjoint_supports_are_orthogonal():
    for seed in range(20):
        m = sm.make_scenario_paths("S1", 20, np.random.default_rng(seed))
        assert not np.any((m.alpha != 0) & (m.beta != 0))
        assert m.alpha @ m.beta == 0.0


def test_half_overlap_sizes_and_cosine():
    assert sm.support_sizes("S3", 32) == (8, 4)
    rng = np.random.default_rng(1)
    cos = []
    for _ in range(200):
        m = sm.make_scenario_paths("S3", 32, rng)
        assert np.count_nonzero(m.alpha) == 8 and np.count_nonzero(m.beta) == 8
        assert np.count_nonzero(m.alpha * m.beta) == 4
        cos.append(m.alpha @ m.beta)
    assert np.mean(cos) == pytest.approx(0.47, abs=0.1)


def test_sizes_round_half_up():
    # p/16 = 1.25 -> 1 and p/4 = 5
    assert sm.support_sizes("S2", 20) == (5, 1)
    # p/16 = 2.5 -> 3
    assert sm.support_sizes("S2", 40) == (10, 3)


def test_noise_free_null_outcome_is_exactly_zero():
    cfg = SimConfig(n=30, p=5, scenario="nullBeta", sigma_eps=0.0, tau=0.0)
    rng = np.random.default_rng(0)
    d = sm.generate_dataset(cfg, sm.make_scenario_paths("nullBeta", 5, rng), rng)
    assert np.all(d.Y == 0.0)


def test_generated_datasets_are_centred_and_finite():
    for sc in sm.SCENARIOS:
        cfg = SimConfig(n=60, p=16, scenario=sc, signal=0.5, angle_deg=60.0)
        rng = sm.replicate_rng(0, 0, 0)
        d = sm.generate_dataset(cfg, sm.make_scenario_paths(sc, 16, rng, 0.5, 60.0), rng)
        assert isinstance(d, Dataset) and d.centred
        assert np.abs(d.X.mean(axis=0)).max() < 1e-12


def test_independent_mediators_have_near_identity_covariance():
    n, p = 2000, 10
    X = sm.sample_mediators(n, p, 0.0, np.random.default_rng(3))
    C = np.corrcoef(X, rowvar=False)
    off = np.abs(C[~np.eye(p, dtype=bool)])
    assert np.mean(off <= 3 / np.sqrt(n)) >= 0.95


@pytest.mark.parametrize("n,p", [(50, 8), (6, 40)])
def test_recursion_equals_cholesky_factor(n, p):
    rho = 0.75
    X = sm.sample_mediators(n, p, rho, np.random.default_rng(7))
    E = np.random.default_rng(7).standard_normal((p, n)).T
    L = np.linalg.cholesky(sm.ar1_cov(p, rho))
    np.testing.assert_allclose(X, E @ L.T, atol=1e-12)


def test_replicate_streams_are_keyed_not_sequential():
    a = sm.replicate_rng(5, 2, 9).standard_normal(3)
    b = sm.replicate_rng(5, 2, 9).standard_normal(3)
    c = sm.replicate_rng(5, 9, 2).standard_normal(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_results_do_not_depend_on_worker_count():
    cells = [SimConfig(n=100, p=10, scenario=sc, seed=4, replicates=7) for sc in ("S1", "S3")]
    one = sm.rows_to_csv(sm.run_table1(cells, workers=1))
    two = sm.rows_to_csv(sm.run_table1(cells, workers=2))
    assert one == two


def test_same_seed_same_bytes():
    cells = [SimConfig(n=200, p=20, scenario="nullBoth", seed=1, replicates=10)]
    assert sm.rows_to_csv(sm.run_table3(cells)) == sm.rows_to_csv(sm.run_table3(cells))
    other = [SimConfig(n=200, p=20, scenario="nullBoth", seed=2, replicates=10)]
    assert sm.rows_to_csv(sm.run_table3(cells)) != sm.rows_to_csv(sm.run_table3(other))


@pytest.fixture(scope="module")
def table1_small():
    cells = [SimConfig(n=500, p=20, scenario=sc, seed=0, replicates=20) for sc in ("S1", "S4")]
    rows = sm.run_table1(cells)
    means = {}
    for r in sm.summarise(rows):
        means[(r["scenario"], r["method"], r["metric"])] = r["mean"]
    return means


def test_full_overlap_methods_agree(table1_small):
    vals = [table1_small[("S4", m, "h")] for m in ("maxie", "maxcor", "reg_y", "reg_a")]
    assert max(vals) - min(vals) <= 0.03


def test_bisector_dominates_on_h(table1_small):
    for sc in ("S1", "S4"):
        h = {m: table1_small[(sc, m, "h")] for m in ("maxie", "maxcor", "reg_y", "reg_a")}
        assert h["maxie"] == max(h.values())
    assert table1_small[("S1", "maxcor", "fstar")] >= table1_small[("S1", "maxie", "fstar")]


def test_regression_baselines_miss_orthogonal_paths(table1_small):
    assert table1_small[("S1", "reg_y", "h")] < 0.5 * table1_small[("S1", "maxie", "h")]
    assert table1_small[("S1", "reg_a", "h")] < 0.5 * table1_small[("S1", "maxie", "h")]


def test_statistic_settles_at_noncentrality():
    cells = [SimConfig(n=3200, p=40, scenario="twoEntry", rho=0.0, tau=0.0, signal=0.5,
                       angle_deg=a, replicates=100) for a in (55.0, 70.0, 84.0)]
    rows = sm._power_rows("fig2", "left", cells, sm.run_cells(sm._table3_replicate, cells),
                          lambda c: c.p - 1)
    got = {(r["angle_deg"], r["metric"]): r["value"] for r in rows}
    for a, delta in ((55.0, 3.09), (70.0, 1.61), (84.0, 0.46)):
        assert got[(a, "delta")] == pytest.approx(delta, abs=0.01)
        assert got[(a, "mean_T")] == pytest.approx(delta, abs=0.15)


def test_dual_power_rises_toward_saturation():
    cells = [SimConfig(n=40, p=p, scenario="denseDual", rho=0.0, tau=0.0, signal=0.5,
                       angle_deg=60.0, replicates=300) for p in (40, 640)]
    rows = sm._power_rows("fig3", "left", cells, sm.run_cells(sm._table3_replicate, cells),
                          lambda c: c.n - 2)
    emp = [r["value"] for r in rows if r["metric"] == "power_empirical"]
    ana = [r["value"] for r in rows if r["metric"] == "power_analytic"]
    assert emp[0] < emp[1] <= ana[1] + 0.03
    assert emp[1] == pytest.approx(0.93, abs=0.08)


def test_qq_pairs_are_sorted_and_aligned():
    T = np.random.default_rng(0).standard_t(9, 500)
    theo, emp = sm.qq_pairs(T, 9)
    assert np.all(np.diff(theo) > 0) and np.all(np.diff(emp) >= 0)
    assert np.corrcoef(theo, emp)[0, 1] > 0.99


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n=10, p=2, scenario="S9")
    with pytest.raises(ValueError):
        SimConfig(n=10, p=2, scenario="S1", rho=1.0)


def test_csv_has_tidy_header():
    text = sm.rows_to_csv([])
    assert text.strip().split(",") == list(sm.COLUMNS)
