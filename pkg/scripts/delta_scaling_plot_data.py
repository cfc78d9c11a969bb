"""Print the delta-scaling table (inv_delta, loglog, functional, ratio) as TSV.

Usage: python3 scripts/delta_scaling_plot_data.py [K_MAX]
Uses delta = 10^-k for k = 2..K_MAX (default 16) with the analytic maximal function.
"""

import sys

from orlicz_lab.experiments import delta_scaling


def main(argv: list[str]) -> int:
    k_max = int(argv[0]) if argv else 16
    rep = delta_scaling([10.0**-k for k in range(2, k_max + 1)], cross_delta=None)
    print("delta\tloglog_inv_delta\tlhs\trhs\tratio")
    for r in (r for r in rep.rows if r["group"] == "delta"):
        print(f"{r['parameter']:.0e}\t{r['loglog_inv_delta']:.6f}\t{r['lhs']:.6f}"
              f"\t{r['rhs']:.6f}\t{r['ratio']:.6f}")
    if rep.fit:
        print(f"# fit rhs = {rep.fit['slope']:.4f} * lhs + {rep.fit['intercept']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
