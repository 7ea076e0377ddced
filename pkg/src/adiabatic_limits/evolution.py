"""Time evolution under H(t) = (1 - s(t)) H0 + s(t) H1 starting from |u>.

Two integrators: a Strang split (exactly unitary; each half of H is diagonal
in its own basis) and classical RK4 on psi' = -i H psi as an independent
cross-check. Neither renormalizes; norm drift is reported, not hidden.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numba
import numpy as np

from .hamiltonian import AdiabaticProblem, apply_h_array
from .hilbert import StateVector, _butterfly, fwht_inplace, uniform_state

Observer = Callable[[float, StateVector], float]
DEFAULT_T_CAP = 1e6
_NO_SAMPLING = 1 << 62


class ConfigError(ValueError):
    pass


class UnreachableTargetError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """``dt=None`` picks ``min(1e-2, 0.1 / max energy)`` per problem."""

    method: str = "strang"
    dt: float | None = None
    sample_every: int = 1

    def __post_init__(self):
        if self.method not in ("strang", "rk4"):
            raise ConfigError(f"unknown integrator {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.sample_every < 1:
            raise ConfigError(f"sample_every must be >= 1, got {self.sample_every}")

    def step_for(self, problem: AdiabaticProblem) -> float:
        return self.dt if self.dt is not None else default_dt(problem)


def default_dt(problem: AdiabaticProblem) -> float:
    scale = problem.max_energy
    return 1e-2 if scale <= 0 else min(1e-2, 0.1 / scale)


@dataclass
class Trajectory:
    times: np.ndarray
    records: dict[str, np.ndarray]
    steps: int
    dt: float
    method: str
    max_norm_drift: float = field(default=0.0)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.records[key]


def _ladder_form(ham) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(ham.ladder.values, dtype=np.float64) + ham.offset
    return values, ham.partition.labels


@numba.njit(cache=True)
def _strang_fused(chi, f_vals, f_lab, e_vals, e_lab, half_kin, pot):
    # chi holds W psi on entry and on exit.
    fa = np.exp(-1j * half_kin * f_vals)
    eb = np.exp(-1j * pot * e_vals)
    for i in range(chi.size):
        chi[i] *= fa[f_lab[i]]
    _butterfly(chi)
    for i in range(chi.size):
        chi[i] *= eb[e_lab[i]]
    _butterfly(chi)
    for i in range(chi.size):
        chi[i] *= fa[f_lab[i]]


def step_strang(problem: AdiabaticProblem, psi: StateVector, t: float, dt: float) -> StateVector:
    s_mid = float(problem.schedule.s(t + dt / 2))
    F, E = problem.H0.table, problem.H1.table
    half = np.exp(-0.5j * dt * (1.0 - s_mid) * F)
    out = psi.amps.copy()
    fwht_inplace(out)
    out *= half
    fwht_inplace(out)
    out *= np.exp(-1j * dt * s_mid * E)
    fwht_inplace(out)
    out *= half
    fwht_inplace(out)
    return StateVector(psi.n, out, check_norm=False)


@numba.njit(cache=True)
def _minus_i_h(out, F, E, s, y):
    # out = -i H(s) y
    for i in range(y.size):
        out[i] = y[i]
    _butterfly(out)
    for i in range(y.size):
        out[i] *= F[i]
    _butterfly(out)
    for i in range(y.size):
        out[i] = -1j * ((1.0 - s) * out[i] + s * E[i] * y[i])


@numba.njit(cache=True)
def _rk4_kernel(amps, F, E, s0, s_half, s1, dt):
    k1 = np.empty_like(amps)
    k2 = np.empty_like(amps)
    k3 = np.empty_like(amps)
    k4 = np.empty_like(amps)
    _minus_i_h(k1, F, E, s0, amps)
    _minus_i_h(k2, F, E, s_half, amps + (0.5 * dt) * k1)
    _minus_i_h(k3, F, E, s_half, amps + (0.5 * dt) * k2)
    _minus_i_h(k4, F, E, s1, amps + dt * k3)
    return amps + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_array(F, E, schedule, amps, t, dt):
    s0, s_half, s1 = (float(schedule.s(x)) for x in (t, t + dt / 2, t + dt))
    return _rk4_kernel(amps, F, E, s0, s_half, s1, dt)


def step_rk4(problem: AdiabaticProblem, psi: StateVector, t: float, dt: float) -> StateVector:
    out = _rk4_array(problem.H0.table, problem.H1.table, problem.schedule, psi.amps, t, dt)
    return StateVector(psi.n, out, check_norm=False)


def exact_flow_derivative(problem: AdiabaticProblem, psi: StateVector, t: float, targets) -> float:
    """d/dt of the probability held on ``targets``, from the Schrodinger equation."""
    idx = np.fromiter((int(w) for w in targets), dtype=np.int64)
    if idx.size == 0:
        return 0.0
    s = float(problem.schedule.s(t))
    h_psi = apply_h_array(problem.H0.table, problem.H1.table, s, psi.amps)
    return float(2.0 * np.sum(np.imag(np.conj(psi.amps[idx]) * h_psi[idx])))


class _Recorder:
    def __init__(self, problem: AdiabaticProblem, observers: Mapping[str, Observer] | None):
        self.problem = problem
        self.solutions = np.asarray(sorted(problem.solutions), dtype=np.int64)
        self.observers = dict(observers or {})
        self.times: list[float] = []
        self.rows: dict[str, list[float]] = {
            key: [] for key in ("success", "beta0_sq", "max_solution_prob", "norm", "flow")
        }
        for key in self.observers:
            self.rows[key] = []

    def record(self, t: float, amps: np.ndarray):
        amps = amps.copy()
        amps.flags.writeable = False
        psi = StateVector(self.problem.n, amps, check_norm=False)
        probs = np.abs(amps[self.solutions]) ** 2
        self.times.append(t)
        self.rows["success"].append(float(probs.sum()))
        self.rows["max_solution_prob"].append(float(probs.max()) if probs.size else 0.0)
        self.rows["beta0_sq"].append(float(abs(amps.sum()) ** 2 / amps.size))
        self.rows["norm"].append(float(np.linalg.norm(amps)))
        self.rows["flow"].append(exact_flow_derivative(self.problem, psi, t, self.solutions))
        for key, fn in self.observers.items():
            self.rows[key].append(float(fn(t, psi)))

    def finish(self, steps, dt, method) -> Trajectory:
        records = {k: np.asarray(v, dtype=np.float64) for k, v in self.rows.items()}
        drift = float(np.max(np.abs(records["norm"] - 1.0)))
        return Trajectory(np.asarray(self.times), records, steps, dt, method, drift)


def evolve(
    problem: AdiabaticProblem,
    config: IntegratorConfig | None = None,
    observers: Mapping[str, Observer] | None = None,
) -> tuple[StateVector, Trajectory]:
    """Integrate from |u> at t = 0 to t = T.

    Samples are taken at t = 0, every ``sample_every`` steps, and at t = T.
    The last step is shortened so the run ends exactly on T.
    """
    config = config or IntegratorConfig()
    T = problem.T
    psi0 = uniform_state(problem.n)
    recorder = _Recorder(problem, observers)
    if T == 0:
        recorder.record(0.0, psi0.amps)
        return psi0, recorder.finish(0, 0.0, config.method)
    dt = config.step_for(problem) if config.dt is not None else min(default_dt(problem), T)
    if dt > T:
        raise ConfigError(f"dt = {dt} exceeds total time T = {T}")
    if dt * problem.max_energy > 0.5:
        warnings.warn(f"dt * max energy = {dt * problem.max_energy:.3g} > 0.5; expect large phase error")

    steps = max(1, math.ceil(T / dt - 1e-9))
    schedule = problem.schedule
    recorder.record(0.0, psi0.amps)
    if config.method == "strang":
        f_vals, f_lab = _ladder_form(problem.H0)
        e_vals, e_lab = _ladder_form(problem.H1)
        chi = psi0.amps.copy()
        fwht_inplace(chi)
        for k in range(steps):
            t0 = k * dt
            h = T - t0 if k == steps - 1 else dt
            s_mid = float(schedule.s(t0 + h / 2))
            _strang_fused(chi, f_vals, f_lab, e_vals, e_lab, 0.5 * h * (1.0 - s_mid), h * s_mid)
            if (k + 1) % config.sample_every == 0 or k == steps - 1:
                amps = chi.copy()
                fwht_inplace(amps)
                recorder.record(T if k == steps - 1 else t0 + h, amps)
        final = chi
        fwht_inplace(final)
    else:
        F, E = problem.H0.table, problem.H1.table
        amps = psi0.amps.copy()
        for k in range(steps):
            t0 = k * dt
            h = T - t0 if k == steps - 1 else dt
            amps = _rk4_array(F, E, schedule, amps, t0, h)
            if (k + 1) % config.sample_every == 0 or k == steps - 1:
                recorder.record(T if k == steps - 1 else t0 + h, amps)
        final = amps
    return StateVector(problem.n, final, check_norm=False), recorder.finish(steps, dt, config.method)


def final_success(problem: AdiabaticProblem, config: IntegratorConfig | None = None) -> float:
    config = dataclasses.replace(config or IntegratorConfig(), sample_every=_NO_SAMPLING)
    _, traj = evolve(problem, config)
    return float(traj["success"][-1])


def min_time_search(
    problem_family: Callable[[float], AdiabaticProblem],
    p_target: float,
    T_hi_start: float = 1.0,
    tol_rel: float = 1e-2,
    config: IntegratorConfig | None = None,
    T_cap: float = DEFAULT_T_CAP,
) -> float:
    """Smallest T (to relative tolerance) whose run reaches ``p_target``.

    Doubles T until the target is met, then bisects the last bracket. Success
    is not guaranteed monotone in T; this returns the upper end of the first
    bracket found, never a T that failed.
    """
    if not 0 < p_target < 1:
        raise ValueError(f"p_target must lie in (0, 1), got {p_target}")
    if not (T_hi_start > 0 and tol_rel > 0):
        raise ValueError("T_hi_start and tol_rel must be positive")

    def success(T):
        return final_success(problem_family(T), config)

    if success(0.0) >= p_target - 1e-12:
        return 0.0
    lo, hi = 0.0, float(T_hi_start)
    while success(hi) < p_target:
        lo, hi = hi, 2.0 * hi
        if hi > T_cap:
            raise UnreachableTargetError(f"success {p_target} not reached for T <= {T_cap:g}")
    while hi - lo > tol_rel * hi:
        mid = 0.5 * (lo + hi)
        if success(mid) >= p_target:
            hi = mid
        else:
            lo = mid
    return hi
