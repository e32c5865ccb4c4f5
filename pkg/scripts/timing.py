"""Wall-clock of the closed forms against the multi-restart numerical oracle."""
import time

from _common import parser, save
from optmed import simulate as sm


def main():
    args = parser(__doc__).parse_args()
    t0 = time.perf_counter()
    cells = sm.timing_cells(args.scale, args.seed)
    rows = sm.run_timing(cells)
    save(rows, cells, "timing", args, t0)
    ms = {(r["n"], r["p"], r["method"]): r["mean"] for r in sm.summarise(rows)
          if r["metric"] == "ms"}
    for n, p in sorted({(k[0], k[1]) for k in ms}):
        line = f"n={n:<5} p={p:<5} maxie {ms[(n, p, 'maxie')]:8.2f} ms"
        if (n, p, "num_h") in ms:
            line += f"  oracle {ms[(n, p, 'num_h')]:9.1f} ms  ratio " \
                    f"{ms[(n, p, 'num_h')] / ms[(n, p, 'maxie')]:.0f}x"
        print(line)


if __name__ == "__main__":
    main()
