"""Command-line interface: ``optmed <command> ...``.

Exit codes: 0 success, 2 malformed input or schema problems, 3 degenerate
data, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, documents, federate, simulate
from .analysis import analyse, analyse_stats
from .core_stats import Dataset
from .errors import InputError, NonFiniteInput, OptmedError
from .inference import noncentrality, power_noncentral_t
from .primal import DEFAULT_RIDGE
from . import special

EXPERIMENTS = ("table1", "table3", "fig1", "fig2", "fig3", "timing")


def read_csv(path, treatment: str, outcome: str):
    """Parse a header-first numeric CSV into ``(X, A, Y, mediator names)``."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InputError(f"{path}: empty file or missing header")
        header = [h.strip() for h in header]
        for role, col in (("--treatment", treatment), ("--outcome", outcome)):
            if col not in header:
                raise InputError(f"{path}: {role} column {col!r} not in header {header}")
        if treatment == outcome:
            raise InputError("treatment and outcome must be different columns")
        if len(set(header)) != len(header):
            raise InputError(f"{path}: duplicate column names in header")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: row {line_no} has {len(row)} fields, "
                                 f"header has {len(header)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(f"{path}: non-numeric value {cell!r} at row {line_no}, "
                                     f"column {col!r}") from None
                if not math.isfinite(v):
                    raise NonFiniteInput(f"{path}: non-finite value {cell!r} at row {line_no}, "
                                         f"column {col!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows)
    ia, iy = header.index(treatment), header.index(outcome)
    med = [j for j in range(len(header)) if j not in (ia, iy)]
    if not med:
        raise InputError(f"{path}: no mediator columns besides treatment and outcome")
    return data[:, med], data[:, ia], data[:, iy], tuple(header[j] for j in med)


def _load_dataset(args):
    X, A, Y, names = read_csv(args.csv, args.treatment, args.outcome)
    return Dataset(X, A, Y, feature_names=names)


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def cmd_fit(args) -> int:
    man = documents.Manifest("fit", _config(args), inputs=[args.csv])
    d = _load_dataset(args)
    res = analyse(d, regime=args.regime, ridge_scale=args.ridge, iut=args.iut,
                  df_override=args.df_override, standardise=args.standardise)
    _emit(documents.dumps(documents.fit_document(res, d.feature_names, man.finish())),
          args.output)
    return 0


def cmd_test(args) -> int:
    man = documents.Manifest("test", _config(args), inputs=[args.csv])
    res = analyse(_load_dataset(args), regime=args.regime, ridge_scale=args.ridge,
                  iut=args.iut, df_override=args.df_override, standardise=args.standardise)
    _emit(documents.dumps(documents.test_document(res, man.finish())), args.output)
    return 0


def cmd_power(args) -> int:
    man = documents.Manifest("power", _config(args))
    if not 0 < args.angle_deg < 180:
        raise InputError("--angle-deg must lie in (0, 180)")
    if not 0 < args.alpha < 0.5:
        raise InputError("--alpha must lie in (0, 0.5)")
    df = args.dim - 1 if args.mode == "primal" else args.dim - 2
    if df < 1:
        raise InputError(f"--dim {args.dim} leaves no degrees of freedom in {args.mode} mode")
    phi = math.radians(args.angle_deg)
    r = power_noncentral_t(noncentrality(phi, df), df, args.alpha, phi0=phi)
    crit = float(special.t_quantile(1.0 - args.alpha / 2.0, df))
    doc = documents.power_document(args.mode, args.angle_deg, args.dim, r, crit, man.finish())
    _emit(documents.dumps(doc), args.output)
    return 0


def _simulate_rows(args):
    exp, scale, seed, workers = args.experiment, args.scale, args.seed, args.workers
    if exp == "table1":
        cells = simulate.table1_grid(scale, seed)
        return simulate.run_table1(cells, workers), cells
    if exp == "table3":
        primal, dual = simulate.table3_grid(scale, seed)
        return simulate.run_table3(primal, dual, workers), primal + dual
    if exp == "fig1":
        cells = simulate.fig1_cells(seed)
        return simulate.run_fig1(cells, workers), cells
    if exp in ("fig2", "fig3"):
        panels = simulate.fig2_cells(scale, seed) if exp == "fig2" else simulate.fig3_cells(scale, seed)
        return simulate.run_figures(exp, scale, seed, workers), [c for v in panels.values() for c in v]
    cells = simulate.timing_cells(scale, seed)
    return simulate.run_timing(cells), cells


def cmd_simulate(args) -> int:
    man = documents.Manifest("simulate", _config(args), seed=args.seed)
    rows, cells = _simulate_rows(args)
    text = simulate.rows_to_csv(rows)
    out = Path(args.output) if args.output else None
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
    manifest = man.finish()
    manifest["cells"] = simulate.config_echo(cells)
    manifest["sampler"] = "AR(1) recursion, equal to multiplication by the Cholesky factor"
    manifest["overlapRounding"] = "shared and support sizes use round-half-up"
    manifest["versions"] = _versions()
    text = json.dumps(manifest, indent=2, allow_nan=False, default=float)
    if args.manifest:
        Path(args.manifest).write_text(text + "\n", encoding="utf-8")
    elif out is not None:
        out.with_suffix(out.suffix + ".manifest.json").write_text(text + "\n", encoding="utf-8")
    return 0


def _versions() -> dict:
    return {"optmed": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def cmd_extract_summary(args) -> int:
    man = documents.Manifest("extract-summary", _config(args), inputs=[args.csv])
    X, A, Y, names = read_csv(args.csv, args.treatment, args.outcome)
    s = federate.site_extract(X, A, Y, site_id=args.site_id or Path(args.csv).stem,
                              feature_names=names)
    _emit(federate.dumps_summary(s, man.finish()), args.output)
    return 0


def cmd_combine(args) -> int:
    man = documents.Manifest("combine", _config(args), inputs=args.summaries)
    sums = []
    for path in args.summaries:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot open {path}: {exc.strerror}") from exc
        sums.append(federate.loads_summary(text))
    s = federate.combine(sums, standardise=args.standardise)
    res = analyse_stats(s, ridge_scale=args.ridge, iut=args.iut, df_override=args.df_override)
    _emit(documents.dumps(documents.fit_document(res, s.feature_names, man.finish())),
          args.output)
    return 0


def _data_flags(p, iut=True):
    p.add_argument("csv", help="header-first numeric CSV")
    p.add_argument("--treatment", required=True, help="treatment column name")
    p.add_argument("--outcome", required=True, help="outcome column name")
    p.add_argument("--standardise", action="store_true", help="scale mediators to unit sd")
    p.add_argument("--regime", choices=("auto", "primal", "dual"), default="auto")
    p.add_argument("--ridge", type=float, default=DEFAULT_RIDGE, help="relative ridge scale")
    p.add_argument("--df-override", type=int, default=None,
                   help="degrees of freedom for the cosine test (testing hook)")
    p.add_argument("--output", "-o", default=None, help="write JSON here instead of stdout")
    if iut:
        p.add_argument("--iut", action="store_true", help="also run the intersection-union test")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optmed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the optimal composite mediator")
    _data_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", help="cosine test of no composite mediation")
    _data_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("power", help="analytic power of the cosine test")
    p.add_argument("--mode", choices=("primal", "dual"), required=True)
    p.add_argument("--angle-deg", type=float, required=True,
                   help="population angle between the paths, in degrees")
    p.add_argument("--dim", type=int, required=True, help="p (primal) or n (dual)")
    p.add_argument("--alpha", type=float, default=0.05, help="test level")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("simulate", help="run a simulation experiment, tidy CSV out")
    p.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o", default=None, help="CSV path (default stdout)")
    p.add_argument("--manifest", default=None, help="manifest JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract-summary", help="site-local cross-product summary")
    p.add_argument("csv")
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--site-id", default=None, help="defaults to the file stem")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_extract_summary)

    p = sub.add_parser("combine", help="pool site summaries, then fit and test")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--standardise", action="store_true")
    p.add_argument("--ridge", type=float, default=DEFAULT_RIDGE)
    p.add_argument("--iut", action="store_true")
    p.add_argument("--df-override", type=int, default=None)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_combine)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except OptmedError as exc:
        print(f"optmed {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"optmed {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
