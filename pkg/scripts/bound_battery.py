"""Run every bound check over a grid of problems and report the tightest slack.

Covers projector problems (three crafted F tables) and general problems with
shuffled Hadamard-basis partitions. Exits 1 if any applicable bound fails.
"""
import argparse
import math
from collections import defaultdict

import numpy as np

from adiabatic_limits import (
    EigenLadder,
    IntegratorConfig,
    Partition,
    build_general_problem,
    build_projector_problem,
    evolve,
    make_diagonal,
    shuffled_partition,
    verify_trajectory,
)
from adiabatic_limits.harness import h0_table


def general_problem(n, rng, T):
    N = 1 << n
    sizes = [N // 2, N // 4, N // 4]
    H0 = make_diagonal(shuffled_partition(n, sizes, rng), EigenLadder((0.0, 0.8, 1.5)), "hadamard")
    labels = rng.integers(1, 3, size=N)
    labels[rng.choice(N, size=2, replace=False)] = 0
    H1 = make_diagonal(Partition(n, labels), EigenLadder((0.0, 1.0, 2.0)), "computational")
    return build_general_problem(H0, H1, T=T)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[6, 8, 10])
    ap.add_argument("--e1", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    worst = defaultdict(lambda: math.inf)
    runs = 0
    for n in args.n:
        N = 1 << n
        for T in (1.0, math.sqrt(N) / 4, math.sqrt(N)):
            problems = [build_projector_problem(n, int(rng.integers(N)), h0_table(kind, n), E1=E1, T=T)
                        for kind in ("search", "halves", "quarters") for E1 in args.e1]
            problems.append(general_problem(n, rng, T))
            for p in problems:
                _, traj = evolve(p, IntegratorConfig(sample_every=4))
                for r in verify_trajectory(p, traj):
                    if r.applicable and r.slack is not None:
                        worst[r.bound_name] = min(worst[r.bound_name], r.slack)
                runs += 1
    print(f"{runs} trajectories")
    for name, slack in sorted(worst.items()):
        print(f"{name:>24}: min slack {slack:+.3e}")
    raise SystemExit(1 if min(worst.values()) < -1e-6 else 0)


if __name__ == "__main__":
    main()
