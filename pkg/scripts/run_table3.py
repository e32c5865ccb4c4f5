"""Rejection rates of the cosine test and the IUT at level 0.05."""
import time

from _common import parser, save
from optmed import simulate as sm


def main():
    p = parser(__doc__)
    p.add_argument("--replicates", type=int, default=1000)
    args = p.parse_args()
    t0 = time.perf_counter()
    primal, dual = sm.table3_grid(args.scale, args.seed, args.replicates)
    rows = sm.run_table3(primal, dual, args.workers)
    save(rows, primal + dual, "table3", args, t0)
    cos, iut = sm.rejection_rate(rows, "cosine"), sm.rejection_rate(rows, "iut")
    print(f"{'panel':<7}{'scenario':<10}{'n':>5}{'p':>5}{'signal':>8}{'cosine':>8}{'IUT':>8}")
    for key, rate in cos.items():
        panel, sc, n, pp, sig = key
        other = f"{iut[key]:>8.3f}" if key in iut else f"{'-':>8}"
        print(f"{panel:<7}{sc:<10}{n:>5}{pp:>5}{sig:>8.2f}{rate:>8.3f}{other}")


if __name__ == "__main__":
    main()
