"""Mean indirect effect of each method per scenario and shape."""
import time

from _common import parser, save
from optmed import simulate as sm


def main():
    args = parser(__doc__).parse_args()
    t0 = time.perf_counter()
    cells = sm.table1_grid(args.scale, args.seed)
    rows = sm.run_table1(cells, args.workers)
    save(rows, cells, "table1", args, t0)
    print(f"{'scenario':<9}{'n':>6}{'p':>6}  {'method':<8}{'mean h':>9}{'sd':>8}")
    for r in sm.summarise(rows):
        if r["metric"] == "h":
            print(f"{r['scenario']:<9}{r['n']:>6}{r['p']:>6}  {r['method']:<8}"
                  f"{r['mean']:>9.3f}{r['sd']:>8.3f}")


if __name__ == "__main__":
    main()
