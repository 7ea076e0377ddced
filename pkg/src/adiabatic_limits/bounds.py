"""Closed-form runtime bounds and their slack against simulated trajectories.

Every report uses the same orientation: ``slack = bound side - measured
side``, so ``slack >= 0`` means the inequality held.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolution import Trajectory
from .hamiltonian import AdiabaticProblem, complement_dim, largest_class_index
from .hilbert import BitString, StateVector, inner

TRAJECTORY_TOL = 1e-6
ALGEBRAIC_TOL = 1e-9


@dataclass
class BoundReport:
    bound_name: str
    analytic_value: float
    measured_value: float
    slack: float | None
    context: dict = field(default_factory=dict)
    applicable: bool = True

    @property
    def holds(self) -> bool:
        return not self.applicable or self.slack is None or self.slack >= -TRAJECTORY_TOL

    def to_dict(self) -> dict:
        return asdict(self)


def derivative_bound_value(N: int, p0_size: int, maxF: float, complement_dim: int) -> float:
    """Ceiling on |d/dt P(solutions)| for any state and any s."""
    return 2.0 * (p0_size / math.sqrt(N)) * maxF * complement_dim


def general_T_bound(c: float, N: int, p0_size: int, maxF: float, complement_dim: int) -> float:
    """Least total time that can push the solution probability from |P0|/N up to ``c``."""
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    numerator = c * math.sqrt(N) - p0_size / math.sqrt(N)
    if numerator <= 0:
        return 0.0
    denominator = 2.0 * p0_size * maxF * complement_dim
    if denominator == 0:
        return math.inf
    return numerator / denominator


def beta0_floor(E1: float, T: float, N: int) -> float:
    return 1.0 - 2.0 * E1 * T / math.sqrt(N)


def success_ceiling(E1: float, T: float, N: int) -> float:
    return 2.0 * E1 * T / math.sqrt(N) + 1.0 / math.sqrt(N)


def zalka_slack(psi: StateVector, u: StateVector, w: int | BitString) -> float:
    """``1 + |<u|w>| - |<w|psi>|^2 - |<u|psi>|^2`` for unit ``psi`` and ``u``."""
    for name, vec in (("psi", psi), ("u", u)):
        err = abs(vec.norm() - 1.0)
        if err > ALGEBRAIC_TOL:
            raise ValueError(f"{name} is not a unit vector (|norm - 1| = {err:.3e})")
    if psi.n != u.n:
        raise ValueError("psi and u have different dimensions")
    w = int(w)
    overlap_uw = abs(u.amps[w])
    return float(1.0 + overlap_uw - abs(psi.amps[w]) ** 2 - abs(inner(u, psi)) ** 2)


def zalka_slack_batch(states: np.ndarray, w: int) -> np.ndarray:
    """Slack for each row of ``states`` against |u> and |w>; rows must be unit vectors."""
    N = states.shape[1]
    u_overlap_sq = np.abs(states.sum(axis=1)) ** 2 / N
    return 1.0 + 1.0 / math.sqrt(N) - np.abs(states[:, w]) ** 2 - u_overlap_sq


def problem_context(problem: AdiabaticProblem, c: float | None = None) -> dict:
    part = problem.H0.partition
    ctx = {
        "n": problem.n,
        "N": problem.dim,
        "p0_size": len(problem.solutions),
        "E1": problem.E1,
        "maxF": problem.H0.ladder.top,
        "Q_K_size": int(part.sizes[largest_class_index(part)]),
        "complement_dim": complement_dim(problem.H0),
        "T": problem.T,
    }
    if c is not None:
        ctx["c"] = c
    return ctx


def verify_trajectory(problem: AdiabaticProblem, trajectory: Trajectory, c: float = 0.5) -> list[BoundReport]:
    times = trajectory.times
    if times.size == 0 or times[0] != 0.0 or not math.isclose(times[-1], problem.T, rel_tol=0, abs_tol=1e-12):
        raise ValueError("trajectory does not span [0, T] of this problem")
    if np.any(np.diff(times) <= 0):
        raise ValueError("trajectory times are not strictly increasing")
    N = problem.dim
    ctx = problem_context(problem, c)
    p0 = ctx["p0_size"]
    reports = []

    if p0:
        d_bound = derivative_bound_value(N, p0, ctx["maxF"], ctx["complement_dim"])
        worst = float(np.max(np.abs(trajectory["flow"])))
        reports.append(BoundReport("derivative_bound", d_bound, worst, d_bound - worst, ctx))

        success = float(trajectory["success"][-1])
        reached = success >= c
        t_bound = general_T_bound(c, N, p0, ctx["maxF"], ctx["complement_dim"])
        reports.append(
            BoundReport(
                "general_T_bound", t_bound, problem.T,
                (problem.T - t_bound) if reached else None,
                {**ctx, "final_success": success}, applicable=reached,
            )
        )
        # Integrated form of the derivative bound; applies whether or not c was reached.
        ceiling = p0 / N + problem.T * d_bound
        reports.append(BoundReport("integrated_flow_ceiling", ceiling, success, ceiling - success, ctx))

    if problem.is_projector:
        E1 = problem.E1
        floors = beta0_floor(E1, times, N)
        margins = trajectory["beta0_sq"] - floors
        i = int(np.argmin(margins))
        reports.append(
            BoundReport(
                "beta0_floor", float(floors[i]), float(trajectory["beta0_sq"][i]), float(margins[i]),
                {**ctx, "t": float(times[i])},
            )
        )
        ceil = success_ceiling(E1, problem.T, N)
        success = float(trajectory["success"][-1])
        reports.append(BoundReport("success_ceiling", ceil, success, ceil - success, ctx))

    if p0:
        # Worst case over solutions is the one holding the most probability.
        measured = trajectory["max_solution_prob"] + trajectory["beta0_sq"]
        limit = 1.0 + 1.0 / math.sqrt(N)
        i = int(np.argmax(measured))
        reports.append(
            BoundReport(
                "zalka", limit, float(measured[i]), float(limit - measured[i]), {**ctx, "t": float(times[i])}
            )
        )
    return reports
