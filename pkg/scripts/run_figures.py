"""Numeric series behind the QQ, primal power and dual saturation figures."""
import time

from _common import parser, save
from optmed import simulate as sm


def main():
    p = parser(__doc__)
    p.add_argument("--figure", choices=("fig1", "fig2", "fig3"), nargs="+",
                   default=["fig1", "fig2", "fig3"])
    args = p.parse_args()
    for fig in args.figure:
        t0 = time.perf_counter()
        rows = sm.run_figures(fig, args.scale, args.seed, args.workers)
        if fig == "fig1":
            cells = sm.fig1_cells(args.seed)
        else:
            panels = (sm.fig2_cells if fig == "fig2" else sm.fig3_cells)(args.scale, args.seed)
            cells = [c for v in panels.values() for c in v]
        save(rows, cells, fig, args, t0)
        if fig != "fig1":
            table = {}
            for r in rows:
                table.setdefault((r["panel"], r["n"], r["p"], r["angle_deg"]), {})[
                    r["metric"]] = r["value"]
            print(f"{'panel':<7}{'n':>6}{'p':>6}{'angle':>7}{'delta':>8}{'mean T':>8}"
                  f"{'emp':>7}{'theory':>8}")
            for (panel, n, pp, ang), m in table.items():
                print(f"{panel:<7}{n:>6}{pp:>6}{ang:>7.0f}{m['delta']:>8.2f}{m['mean_T']:>8.2f}"
                      f"{m['power_empirical']:>7.3f}{m['power_analytic']:>8.3f}")


if __name__ == "__main__":
    main()
