"""Data-generating processes and experiment runners.

Every replicate draws from its own generator keyed by
``(seed, cell index, replicate index)``, so results are identical whatever
the number of worker processes.  Runners return tidy rows (one per
cell / replicate / method / metric) ready for :func:`write_csv`.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy import signal

from .baselines import OracleConfig, numerical_oracle, reg_a_on_x, reg_y_on_x
from .core_stats import Dataset, compute_sufficient_stats
from .dual import dual_path_vectors, dual_statistics, maxie_fit_dual
from .inference import cosine_test, iut_test, population_angle, power_at_angle
from .maxcor import maxcor_fit, mediation_index
from .primal import maxie_fit_primal, path_vectors
from . import special

SCENARIOS = ("S1", "S2", "S3", "S4", "nullBoth", "nullBeta", "nullAlpha", "shared",
             "twoEntry", "denseDual")
OVERLAP = {"S1": 0.0, "S2": 1 / 16, "S3": 1 / 8, "S4": 1 / 4}
COLUMNS = ("experiment", "panel", "cell", "scenario", "n", "p", "signal", "angle_deg",
           "replicate", "method", "metric", "value")


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    scenario: str
    rho: float = 0.75
    tau: float = 0.25
    sigma_eps: float = 0.5
    signal: float = 1.0
    angle_deg: float = 90.0
    seed: int = 0
    replicates: int = 20

    def __post_init__(self):
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.n < 3 or self.replicates < 1:
            raise ValueError("need n >= 3 and replicates >= 1")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")


@dataclass(frozen=True)
class PopulationModel:
    """Structural coefficients of A and Y on X plus the law of X's rows.

    ``rho = 0`` means identity covariance.
    """

    alpha: np.ndarray
    beta: np.ndarray
    rho: float

    @property
    def p(self) -> int:
        return self.alpha.size

    def sigma_x(self) -> np.ndarray:
        return ar1_cov(self.p, self.rho)


def ar1_cov(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def replicate_rng(seed: int, cell: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, cell, replicate]))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def support_sizes(scenario: str, p: int) -> tuple[int, int]:
    """(support size, shared size) for S1-S4; non-integers rounded half-up."""
    k = max(_round_half_up(p / 4), 1)
    s = _round_half_up(p * OVERLAP[scenario])
    return k, min(s, k)


def make_scenario_paths(scenario: str, p: int, rng: np.random.Generator,
                        signal: float = 1.0, angle_deg: float = 90.0,
                        rho: float = 0.75) -> PopulationModel:
    """Path coefficients for one replicate of a named scenario."""
    alpha, beta = np.zeros(p), np.zeros(p)
    if scenario in OVERLAP:
        k, s = support_sizes(scenario, p)
        perm = rng.permutation(p)
        shared, ua, ub = perm[:s], perm[s:k], perm[k:2 * k - s]
        common = rng.standard_normal(s)
        alpha[shared] = common
        beta[shared] = common
        alpha[ua] = rng.standard_normal(k - s)
        beta[ub] = rng.standard_normal(k - s)
        alpha /= np.linalg.norm(alpha)
        beta /= np.linalg.norm(beta)
    elif scenario == "nullBeta":
        alpha[0] = signal
    elif scenario == "nullAlpha":
        beta[0] = signal
    elif scenario == "shared":
        alpha[0] = beta[0] = signal
    elif scenario == "twoEntry":
        phi = np.deg2rad(angle_deg)
        alpha[0] = signal
        beta[0], beta[1] = signal * np.cos(phi), signal * np.sin(phi)
    elif scenario == "denseDual":
        alpha = rng.standard_normal(p)
        alpha /= np.linalg.norm(alpha)
        v = rng.standard_normal(p)
        v -= (v @ alpha) * alpha
        v /= np.linalg.norm(v)
        phi = np.deg2rad(angle_deg)
        beta = np.cos(phi) * alpha + np.sin(phi) * v
    elif scenario != "nullBoth":
        raise ValueError(f"unknown scenario {scenario!r}")
    return PopulationModel(alpha=alpha, beta=beta, rho=rho)


def sample_mediators(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Rows i.i.d. N(0, AR1(rho)).

    The AR(1) recursion ``x_j = rho x_{j-1} + sqrt(1-rho^2) e_j`` is exactly
    multiplication by the Cholesky factor of the AR(1) covariance, in O(np).
    """
    E = rng.standard_normal((p, n)).T
    if rho == 0:
        return E
    b = math.sqrt(1.0 - rho * rho)
    if p > n:
        E[:, 0] /= b
        return signal.lfilter([b], [1.0, -rho], E, axis=1)
    # short recursions: a column loop beats lfilter's per-row overhead
    E[:, 1:] *= b
    for j in range(1, p):
        E[:, j] += rho * E[:, j - 1]
    return E


def generate_dataset(cfg: SimConfig, model: PopulationModel, rng: np.random.Generator) -> Dataset:
    """Draw one centred dataset.

    Linear scenarios: ``A = X alpha + e_A``, ``Y = X beta + tau A + e_Y``.
    ``denseDual``: ``X = snr sqrt(p) A alpha' + E`` and
    ``Y = snr sqrt(p) X beta + e`` with unit-variance noise and
    ``snr = cfg.signal``.
    """
    n, p = cfg.n, cfg.p
    if cfg.scenario == "denseDual":
        scale = cfg.signal * math.sqrt(p)
        A = rng.standard_normal(n)
        X = scale * np.outer(A, model.alpha) + rng.standard_normal((n, p))
        Y = scale * (X @ model.beta) + rng.standard_normal(n)
    else:
        X = sample_mediators(n, p, model.rho, rng)
        X -= X.mean(axis=0)
        A = X @ model.alpha + cfg.sigma_eps * rng.standard_normal(n)
        Y = X @ model.beta + cfg.tau * A + cfg.sigma_eps * rng.standard_normal(n)
    # continuous draws cannot produce constant columns, so centre directly
    X = X - X.mean(axis=0)
    return Dataset(X, A - A.mean(), Y - Y.mean(), centred=True)


def population_paths(model: PopulationModel, sigma_eps: float):
    """``(alpha0, beta0, Sigma_Z)`` per observation for the linear DGP."""
    S = model.sigma_x()
    alpha0 = S @ model.alpha
    var_a = float(model.alpha @ S @ model.alpha) + sigma_eps**2
    sigma_z = S - np.outer(alpha0, alpha0) / var_a
    return alpha0, sigma_z @ model.beta, sigma_z


def metric_angle_two_entry(angle_deg: float, p: int, signal: float = 0.5,
                           sigma_eps: float = 0.5) -> float:
    """Population-metric angle for the two-entry design with identity covariance."""
    model = make_scenario_paths("twoEntry", p, np.random.default_rng(0), signal, angle_deg, rho=0.0)
    return population_angle(*population_paths(model, sigma_eps))


# cell evaluation ----------------------------------------------------------

def _cos_and_df(d: Dataset):
    if d.p <= d.n - 2:
        s = compute_sufficient_stats(d)
        return path_vectors(s).cos_phi, d.p - 1, s
    return dual_path_vectors(dual_statistics(d)).cos_phi, d.n - 2, None


def _model_for(cfg: SimConfig, rng):
    return make_scenario_paths(cfg.scenario, cfg.p, rng, cfg.signal, cfg.angle_deg, cfg.rho)


def _table1_replicate(cfg: SimConfig, cell: int, r: int):
    rng = replicate_rng(cfg.seed, cell, r)
    d = generate_dataset(cfg, _model_for(cfg, rng), rng)
    out = []
    if d.p <= d.n - 2:
        s = compute_sufficient_stats(d)
        g = path_vectors(s)
        fit = maxie_fit_primal(s, geometry=g)
        mc = maxcor_fit(s, geometry=g)
        for method, w in (("maxie", fit.w_plus), ("maxcor", mc.w),
                          ("reg_y", reg_y_on_x(s)), ("reg_a", reg_a_on_x(s))):
            w_dir = w if w @ s.a >= 0 else -w
            wa, wz = w_dir @ s.a, w_dir @ s.z
            h = wa * wz / (s.norm_a2 * (w_dir @ s.V @ w_dir))
            out.append((method, "h", float(h)))
            out.append((method, "fstar", float(mediation_index(w_dir, s))))
    else:
        fit = maxie_fit_dual(d)
        out.append(("maxie", "h", fit.coef_plus.h))
    return out


def _table3_replicate(cfg: SimConfig, cell: int, r: int):
    rng = replicate_rng(cfg.seed, cell, r)
    d = generate_dataset(cfg, _model_for(cfg, rng), rng)
    cos, df, s = _cos_and_df(d)
    t = cosine_test(cos, df)
    out = [("cosine", "pvalue", t.p_two_sided), ("cosine", "T", t.T)]
    if s is not None and d.n > d.p + 2:
        out.append(("iut", "pvalue", iut_test(s).p_value))
    return out


def _null_replicate(cfg: SimConfig, cell: int, r: int):
    rng = replicate_rng(cfg.seed, cell, r)
    d = generate_dataset(cfg, _model_for(cfg, rng), rng)
    cos, df, _ = _cos_and_df(d)
    return [("cosine", "T", cosine_test(cos, df).T)]


def _timing_replicate(cfg: SimConfig, cell: int, r: int, repeats: int = 5,
                      oracle_restarts: int = 10):
    rng = replicate_rng(cfg.seed, cell, r)
    d = generate_dataset(cfg, _model_for(cfg, rng), rng)
    out = []

    def clock(fn):
        fn()  # warm-up
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = fn()
            times.append(time.perf_counter() - t0)
        return res, float(np.median(times)) * 1e3

    if d.p <= d.n - 2:
        fit, t_h = clock(lambda: maxie_fit_primal(compute_sufficient_stats(d)))
        mc, t_f = clock(lambda: maxcor_fit(compute_sufficient_stats(d)))
        ry, t_ry = clock(lambda: reg_y_on_x(compute_sufficient_stats(d)))
        ra, t_ra = clock(lambda: reg_a_on_x(compute_sufficient_stats(d)))
        out += [("maxie", "h", fit.coef_plus.h), ("maxie", "ms", t_h),
                ("maxcor", "fstar", mc.fstar), ("maxcor", "ms", t_f),
                ("reg_y", "ms", t_ry), ("reg_a", "ms", t_ra)]
        if d.p <= 100:
            ocfg = OracleConfig(restarts=oracle_restarts, seed=cfg.seed * 1000 + r)
            oh, t_oh = clock(lambda: numerical_oracle(compute_sufficient_stats(d), "h", ocfg))
            of, t_of = clock(lambda: numerical_oracle(compute_sufficient_stats(d), "fstar", ocfg))
            out += [("num_h", "h", oh.value), ("num_h", "ms", t_oh),
                    ("num_fstar", "fstar", of.value), ("num_fstar", "ms", t_of)]
    else:
        fit, t_h = clock(lambda: maxie_fit_dual(d))
        out += [("maxie", "h", fit.coef_plus.h), ("maxie", "ms", t_h)]
    return out


def _run_chunk(args):
    fn, cfg, cell, reps = args
    return [fn(cfg, cell, r) for r in reps]


def run_cells(fn, cells: list[SimConfig], workers: int = 1, chunk: int = 50):
    """Evaluate ``fn(cfg, cell, replicate)`` over all cells and replicates.

    Output order is fixed by (cell, replicate) regardless of ``workers``.
    """
    tasks = []
    for ci, cfg in enumerate(cells):
        reps = list(range(cfg.replicates))
        for i in range(0, len(reps), chunk):
            tasks.append((fn, cfg, ci, reps[i:i + chunk]))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, tasks))
    else:
        chunks = [_run_chunk(t) for t in tasks]
    results = [[] for _ in cells]
    for (_, _, ci, _), res in zip(tasks, chunks):
        results[ci].extend(res)
    return results


def _rows(experiment, panel, cells, results):
    rows = []
    for ci, (cfg, reps) in enumerate(zip(cells, results)):
        for r, rep in enumerate(reps):
            for method, metric, value in rep:
                rows.append({
                    "experiment": experiment, "panel": panel, "cell": ci,
                    "scenario": cfg.scenario, "n": cfg.n, "p": cfg.p, "signal": cfg.signal,
                    "angle_deg": cfg.angle_deg, "replicate": r, "method": method,
                    "metric": metric, "value": float(value),
                })
    return rows


# experiment grids ----------------------------------------------------------

def table1_grid(scale: str = "desk", seed: int = 0, replicates: int = 20) -> list[SimConfig]:
    shapes = [(500, 20), (1000, 100)]
    if scale == "full":
        shapes += [(1000, 500), (500, 1000)]
    return [SimConfig(n=n, p=p, scenario=sc, seed=seed, replicates=replicates)
            for sc in ("S1", "S2", "S3", "S4") for n, p in shapes]


def run_table1(cells: list[SimConfig], workers: int = 1) -> list[dict]:
    """Mean h (and f*) of MaxIE, MaxCor and the two regressions per cell."""
    return _rows("table1", "h", cells, run_cells(_table1_replicate, cells, workers))


def table3_grid(scale: str = "desk", seed: int = 0, replicates: int = 1000):
    primal_ps = (20, 40, 80) if scale == "full" else (20,)
    dual_ns = (40, 60, 80, 100, 120, 140) if scale == "full" else (40, 140)
    primal, dual = [], []
    for p in primal_ps:
        for sc, sig in (("nullBoth", 1.0), ("nullBeta", 1.0), ("nullAlpha", 1.0),
                        ("shared", 0.10), ("shared", 0.20)):
            primal.append(SimConfig(n=200, p=p, scenario=sc, signal=sig, seed=seed,
                                    replicates=replicates))
    for n in dual_ns:
        for sc, sig in (("nullBoth", 1.0), ("nullBeta", 1.0), ("nullAlpha", 1.0),
                        ("shared", 0.30), ("shared", 0.50)):
            dual.append(SimConfig(n=n, p=200, scenario=sc, signal=sig, rho=0.0, tau=0.0,
                                  seed=seed + 1, replicates=replicates))
    return primal, dual


def run_table3(cells_primal, cells_dual=(), workers: int = 1) -> list[dict]:
    """Per-replicate p-values of the cosine test (and IUT in the primal)."""
    rows = _rows("table3", "primal", cells_primal,
                 run_cells(_table3_replicate, list(cells_primal), workers))
    if cells_dual:
        rows += _rows("table3", "dual", cells_dual,
                      run_cells(_table3_replicate, list(cells_dual), workers))
    return rows


def fig1_cells(seed: int = 0, replicates: int = 1000):
    cells = []
    for n, p in ((1000, 100), (100, 1000)):
        for sc in ("nullBoth", "nullBeta", "nullAlpha"):
            cells.append(SimConfig(n=n, p=p, scenario=sc, tau=0.0, seed=seed,
                                   replicates=replicates))
    return cells


def null_statistics(cfg: SimConfig, cell: int = 0, workers: int = 1) -> np.ndarray:
    """Cosine-test statistics for ``cfg.replicates`` draws of one cell."""
    res = run_cells(_null_replicate, [cfg], workers)[0]
    return np.array([rep[0][2] for rep in res])


def qq_pairs(T: np.ndarray, df: int):
    """(theoretical t quantile, empirical quantile) at plotting positions."""
    T = np.sort(T)
    probs = (np.arange(1, T.size + 1) - 0.5) / T.size
    return special.t_quantile(probs, df), T


def run_fig1(cells: list[SimConfig], workers: int = 1) -> list[dict]:
    rows = []
    results = run_cells(_null_replicate, cells, workers)
    for ci, (cfg, reps) in enumerate(zip(cells, results)):
        T = np.array([rep[0][2] for rep in reps])
        df = cfg.p - 1 if cfg.p <= cfg.n - 2 else cfg.n - 2
        theo, emp = qq_pairs(T, df)
        panel = "primal" if cfg.p <= cfg.n - 2 else "dual"
        for k, (x, y) in enumerate(zip(theo, emp)):
            rows.append({"experiment": "fig1", "panel": panel, "cell": ci,
                         "scenario": cfg.scenario, "n": cfg.n, "p": cfg.p,
                         "signal": cfg.signal, "angle_deg": cfg.angle_deg, "replicate": k,
                         "method": f"t({df})", "metric": "qq_theoretical", "value": float(x)})
            rows.append({**rows[-1], "metric": "qq_empirical", "value": float(y)})
    return rows


def _power_rows(experiment, panel, cells, results, df_of, alpha_level=0.05):
    rows = []
    for ci, (cfg, reps) in enumerate(zip(cells, results)):
        pv = np.array([rep[0][2] for rep in reps])
        T = np.array([rep[1][2] for rep in reps])
        df = df_of(cfg)
        phi = np.deg2rad(cfg.angle_deg)
        if cfg.scenario == "twoEntry":
            phi = metric_angle_two_entry(cfg.angle_deg, cfg.p, cfg.signal, cfg.sigma_eps)
        analytic = power_at_angle(phi, df, alpha_level)
        base = {"experiment": experiment, "panel": panel, "cell": ci, "scenario": cfg.scenario,
                "n": cfg.n, "p": cfg.p, "signal": cfg.signal, "angle_deg": cfg.angle_deg,
                "replicate": -1, "method": "cosine"}
        for metric, value in (("power_empirical", float(np.mean(pv < alpha_level))),
                              ("power_analytic", analytic.power), ("delta", analytic.delta),
                              ("mean_T", float(T.mean())), ("sd_T", float(T.std(ddof=1)))):
            rows.append({**base, "metric": metric, "value": value})
    return rows


def fig2_cells(scale: str = "desk", seed: int = 0):
    reps = 1000 if scale == "full" else 200
    ns = (50, 100, 200, 400, 800, 1600, 3200) if scale == "full" else (50, 200, 800, 3200)
    sweep = range(10, 180, 10) if scale == "full" else range(15, 180, 30)
    base = dict(p=40, scenario="twoEntry", rho=0.0, tau=0.0, signal=0.5, seed=seed,
                replicates=reps)
    left = [SimConfig(n=n, angle_deg=a, **base) for a in (55.0, 70.0, 84.0) for n in ns]
    centre = [SimConfig(n=n, angle_deg=float(a), **base)
              for n in ((100, 200, 1000) if scale == "full" else (200,)) for a in sweep]
    right = [SimConfig(n=n, angle_deg=a, **base) for a in (55.0, 84.0, 90.0)
             for n in ((50, 100, 200, 400, 800, 1600) if scale == "full" else (50, 400, 1600))]
    return {"left": left, "centre": centre, "right": right}


def fig3_cells(scale: str = "desk", seed: int = 0):
    reps = 1000 if scale == "full" else 200
    base = dict(n=40, scenario="denseDual", rho=0.0, tau=0.0, signal=0.5, seed=seed,
                replicates=reps)
    ps = (40, 80, 160, 1000) if scale == "full" else (40, 160)
    sweep = range(10, 180, 10) if scale == "full" else range(30, 180, 30)
    left = [SimConfig(p=p, angle_deg=60.0, **base) for p in ps]
    centre = [SimConfig(p=p, angle_deg=float(a), **base)
              for p in ((40, 80, 160) if scale == "full" else (80,)) for a in sweep]
    right = [SimConfig(p=p, angle_deg=a, **base) for a in (60.0, 70.0, 80.0, 90.0)
             for p in ((40, 80, 160, 320, 640) if scale == "full" else (40, 160))]
    return {"left": left, "centre": centre, "right": right}


def run_figures(figure: str, scale: str = "desk", seed: int = 0, workers: int = 1) -> list[dict]:
    """Numeric series behind the QQ and power figures (plotting is external)."""
    if figure == "fig1":
        reps = 1000
        return run_fig1(fig1_cells(seed, reps), workers)
    panels = fig2_cells(scale, seed) if figure == "fig2" else fig3_cells(scale, seed)
    if figure == "fig2":
        def df_of(c):
            return c.p - 1
    else:
        def df_of(c):
            return c.n - 2
    rows = []
    for panel, cells in panels.items():
        res = run_cells(_table3_replicate, cells, workers)
        rows += _power_rows(figure, panel, cells, res, df_of)
    return rows


def timing_cells(scale: str = "desk", seed: int = 0, replicates: int = 5):
    shapes = [(500, 20), (1000, 100)]
    if scale == "full":
        shapes += [(1000, 500), (500, 1000)]
    return [SimConfig(n=n, p=p, scenario="S3", seed=seed, replicates=replicates)
            for n, p in shapes]


def run_timing(cells: list[SimConfig]) -> list[dict]:
    # timings are taken sequentially so workers do not compete for the core
    return _rows("timing", "table2", cells, run_cells(_timing_replicate, cells, 1))


# output --------------------------------------------------------------------

def summarise(rows: Iterable[dict], keys=("experiment", "panel", "cell", "scenario", "n", "p",
                                             "signal", "angle_deg", "method", "metric")):
    """Mean, sd and count of ``value`` grouped by ``keys`` (insertion order)."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row["value"])
    out = []
    for key, vals in groups.items():
        v = np.asarray(vals, dtype=float)
        out.append({**dict(zip(keys, key)), "mean": float(v.mean()),
                    "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0, "count": int(v.size)})
    return out


def rejection_rate(rows, method="cosine", alpha_level=0.05):
    """Rejection rate per cell from per-replicate p-value rows."""
    pv = [r for r in rows if r["method"] == method and r["metric"] == "pvalue"]
    rates = {}
    for r in pv:
        rates.setdefault((r["panel"], r["scenario"], r["n"], r["p"], r["signal"]), []).append(
            r["value"] < alpha_level)
    return {k: float(np.mean(v)) for k, v in rates.items()}


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: list[dict], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in COLUMNS])


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def config_echo(cells: list[SimConfig]) -> list[dict]:
    return [asdict(c) for c in cells]
