"""Probe the two-overlap inequality with random and adversarial states.

Random states sit far from the boundary; states near the top eigenvector of
|w><w| + |u><u| approach zero slack, which is where a sign error would show.
"""
import argparse

import numpy as np

from adiabatic_limits import StateVector, uniform_state, zalka_slack
from adiabatic_limits.harness import zalka_min_slack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    n, N, w = args.n, 1 << args.n, 0
    rng = np.random.default_rng(args.seed)

    print(f"random states: min slack {zalka_min_slack(n, args.trials, args.seed, w):.6f}")

    u = uniform_state(n)
    proj = np.outer(u.amps, u.amps.conj())
    proj[w, w] += 1
    top = np.linalg.eigh(proj)[1][:, -1]
    for eps in (1e-1, 1e-3, 1e-6):
        slacks = []
        for _ in range(200):
            v = top + eps * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
            slacks.append(zalka_slack(StateVector(n, v / np.linalg.norm(v)), u, w))
        print(f"perturbation {eps:.0e}: min slack {min(slacks):+.3e}")


if __name__ == "__main__":
    main()
