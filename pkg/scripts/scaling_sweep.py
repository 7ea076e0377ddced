"""Minimum time to reach p_target versus n, for each interpolation schedule.

Prints one CSV row per (schedule, n) and the fitted log2 slope per schedule.
A slope near 1/2 is the square-root speedup; the linear schedule gives ~1.
"""
import argparse
import csv
import sys

import numpy as np

from adiabatic_limits import build_search_problem, general_T_bound, min_time_search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=6)
    ap.add_argument("--n-max", type=int, default=12)
    ap.add_argument("--p-target", type=float, default=0.5)
    ap.add_argument("--schedules", default="local,linear")
    args = ap.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["schedule", "n", "minT", "general_T_bound"])
    slopes = {}
    for kind in args.schedules.split(","):
        ns, times = [], []
        for n in range(args.n_min, args.n_max + 1):
            family = lambda T, n=n, kind=kind: build_search_problem(n, (1 << n) // 3, T=T, schedule=kind)
            t = min_time_search(family, args.p_target)
            ns.append(n)
            times.append(t)
            out.writerow([kind, n, f"{t:.4f}", f"{general_T_bound(args.p_target, 1 << n, 1, 1.0, 1):.4f}"])
        slopes[kind] = float(np.polyfit(ns, np.log2(times), 1)[0])
    for kind, slope in slopes.items():
        print(f"# {kind}: log2(minT) slope {slope:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
