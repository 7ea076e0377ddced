import numpy as np
import pytest
from scipy.integrate import solve_ivp

from adiabatic_limits.bounds import general_T_bound
from adiabatic_limits.evolution import (
    ConfigError,
    IntegratorConfig,
    UnreachableTargetError,
    evolve,
    exact_flow_derivative,
    min_time_search,
    step_rk4,
    step_strang,
)
from adiabatic_limits.hamiltonian import (
    AdiabaticProblem,
    EigenLadder,
    Partition,
    Schedule,
    build_projector_problem,
    build_search_problem,
    make_diagonal,
)
from adiabatic_limits.hilbert import StateVector, prob_mass, uniform_state

from .oracles import dense_hamiltonian
from .test_hamiltonian import random_problem


def fidelity(a, b):
    return abs(np.vdot(a.amps, b.amps)) ** 2


def zero_problem(n, T=1.0):
    part = Partition(n, np.zeros(1 << n, dtype=int))
    H0 = make_diagonal(part, EigenLadder((0,)), "hadamard")
    H1 = make_diagonal(part, EigenLadder((0,)), "computational")
    return AdiabaticProblem(n, H0, H1, Schedule("linear", T), frozenset({0}))


def frozen_final(problem):
    """Same Hamiltonians with s pinned at 1, via a schedule that is 1 everywhere on (0, T]."""
    class Ones(Schedule):
        def s(self, t):
            return 1.0

    return AdiabaticProblem(problem.n, problem.H0, problem.H1, Ones("linear", problem.T), problem.solutions)


def test_zero_hamiltonian_steps_are_identity(rng):
    p = zero_problem(4)
    psi = StateVector.random(4, rng)
    assert np.max(np.abs(step_strang(p, psi, 0.2, 0.1).amps - psi.amps)) <= 1e-15
    assert np.array_equal(step_rk4(p, psi, 0.2, 0.1).amps, psi.amps)


def test_strang_diagonal_phase(rng):
    p = frozen_final(random_problem(4, rng))
    psi = StateVector.random(4, rng)
    dt = 0.3
    out = step_strang(p, psi, 0.0, dt)
    expected = np.exp(-1j * p.H1.table * dt) * psi.amps
    assert np.max(np.abs(out.amps - expected)) <= 1e-14


def test_rk4_scalar_phase_error_is_fifth_order():
    # Single qubit, s pinned at 1, E = (0, 1): amplitude of |1> solves y' = -i y.
    H1 = make_diagonal(Partition(1, np.array([0, 1])), EigenLadder((0, 1)), "computational")
    H0 = make_diagonal(Partition(1, np.array([0, 0])), EigenLadder((0,)), "hadamard")
    p = frozen_final(AdiabaticProblem(1, H0, H1, Schedule("linear", 1.0), frozenset({0})))
    psi = StateVector.basis(1, 1)
    errs = []
    for dt in (0.1, 0.05):
        out = step_rk4(p, psi, 0.0, dt)
        errs.append(abs(out.amps[1] - np.exp(-1j * dt)))
    assert errs[0] <= 1e-6
    assert 25 <= errs[0] / errs[1] <= 40  # local error O(dt^5)


def test_rk4_norm_drift_per_step(rng):
    for _ in range(5):
        p = random_problem(6, rng)
        scale = 10.0 / p.max_energy
        p = AdiabaticProblem(
            6,
            make_diagonal(p.H0.partition, EigenLadder(tuple(np.array(p.H0.ladder.values) * scale)), "hadamard"),
            make_diagonal(p.H1.partition, EigenLadder(tuple(np.array(p.H1.ladder.values) * scale)), "computational"),
            p.schedule,
            p.solutions,
        )
        psi = StateVector.random(6, rng)
        out = step_rk4(p, psi, 0.5, 1e-3)
        assert abs(out.norm() - 1) <= 1e-12


def test_strang_matches_rk4_n4():
    p = build_search_problem(4, 7, E1=1.0, T=10.0)
    a, _ = evolve(p, IntegratorConfig("strang", 1e-3, 10**6))
    b, _ = evolve(p, IntegratorConfig("rk4", 1e-3, 10**6))
    assert fidelity(a, b) >= 1 - 1e-8


def dense_reference(problem, rtol=1e-11):
    F, E = problem.H0.table, problem.H1.table

    def rhs(t, y):
        return -1j * dense_hamiltonian(F, E, float(problem.schedule.s(t))) @ y

    sol = solve_ivp(rhs, (0, problem.T), uniform_state(problem.n).amps, method="DOP853", rtol=rtol, atol=1e-13)
    return StateVector(problem.n, sol.y[:, -1], check_norm=False)


@pytest.mark.parametrize("kind", ["linear", "smoothstep"])
def test_evolve_matches_dense_ode_reference(kind, rng):
    base = random_problem(4, rng, T=6.0)
    p = AdiabaticProblem(4, base.H0, base.H1, Schedule(kind, 6.0), base.solutions)
    ref = dense_reference(p)
    for method in ("strang", "rk4"):
        psi, _ = evolve(p, IntegratorConfig(method, 1e-3, 10**6))
        assert fidelity(psi, ref) >= 1 - 1e-9


def test_strang_convergence_order(rng):
    p = random_problem(5, rng, T=10.0)

    def run(dt):
        return evolve(p, IntegratorConfig("strang", dt, 10**9))[0].amps

    ref = run(0.1 / 8)
    e1 = np.linalg.norm(run(0.1) - ref)
    e2 = np.linalg.norm(run(0.05) - ref)
    assert 3.3 <= e1 / e2 <= 4.8


def test_evolve_fused_loop_matches_repeated_step_strang(rng):
    p = random_problem(5, rng, T=1.0)
    psi = uniform_state(5)
    for k in range(10):
        psi = step_strang(p, psi, k * 0.1, 0.1)
    fused, _ = evolve(p, IntegratorConfig("strang", 0.1))
    assert np.max(np.abs(fused.amps - psi.amps)) <= 1e-13


def test_evolve_samples_and_lands_on_T():
    p = build_search_problem(3, 1, T=1.0)
    _, traj = evolve(p, IntegratorConfig("strang", 0.3, 2))
    assert traj.steps == 4
    assert np.allclose(traj.times, [0.0, 0.6, 1.0])
    assert traj.times[-1] == 1.0


def test_evolve_zero_time():
    p = build_search_problem(5, 3, T=0.0)
    psi, traj = evolve(p)
    assert abs(traj["success"][-1] - 1 / 32) <= 1e-9
    assert np.array_equal(psi.amps, uniform_state(5).amps)


def test_evolve_single_tiny_step():
    p = build_search_problem(6, 3, T=1e-9)
    _, traj = evolve(p)
    assert abs(traj["success"][-1] - 1 / 64) <= 1e-9


def test_evolve_rejects_dt_larger_than_T():
    with pytest.raises(ConfigError):
        evolve(build_search_problem(2, 1, T=0.5), IntegratorConfig(dt=1.0))


def test_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig("euler")
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=0)
    with pytest.raises(ConfigError):
        IntegratorConfig(sample_every=0)


def test_strang_norm_is_preserved(rng):
    p = random_problem(6, rng, T=50.0)
    _, traj = evolve(p, IntegratorConfig("strang", 1e-2, 10))
    assert traj.max_norm_drift <= 1e-9


def test_long_run_unitarity():
    p = build_projector_problem(6, 5, 10 * np.minimum(np.arange(64), 1.0), E1=10.0, T=1000.0)
    _, traj = evolve(p, IntegratorConfig("strang", 1e-2, 5000))
    assert traj.max_norm_drift <= 1e-9


def test_observers_do_not_interfere(rng):
    p = random_problem(5, rng, T=3.0)
    cfg = IntegratorConfig("strang", 0.01, 7)
    seen = []

    def nosy(t, psi):
        seen.append(t)
        with pytest.raises(ValueError):
            psi.amps[0] = 0
        return float(np.abs(psi.amps[0]))

    plain, _ = evolve(p, cfg)
    watched, traj = evolve(p, cfg, observers={"amp0": nosy})
    assert np.array_equal(plain.amps, watched.amps)
    assert len(seen) == traj.times.size == traj["amp0"].size


def test_flow_derivative_vanishes_at_start(rng):
    p = random_problem(6, rng)
    assert exact_flow_derivative(p, uniform_state(6), 0.0, p.solutions) == 0.0


def finite_difference_flow(problem, psi, t, targets, delta=1e-6):
    ahead = step_strang(problem, psi, t, delta)
    behind = step_strang(problem, psi, t, -delta)
    return (prob_mass(ahead, targets) - prob_mass(behind, targets)) / (2 * delta)


def test_flow_derivative_matches_finite_difference(rng):
    p = random_problem(6, rng, T=8.0)
    targets = sorted(p.solutions)[:3] or [0]
    errors = []

    def check(t, psi):
        if 0 < t < p.T:
            errors.append(abs(exact_flow_derivative(p, psi, t, targets) - finite_difference_flow(p, psi, t, targets)))
        return 0.0

    evolve(p, IntegratorConfig("strang", 0.01, 40), observers={"fd": check})
    assert errors and max(errors) <= 1e-6


def test_min_time_search_initial_probability_is_enough():
    family = lambda T: build_search_problem(4, 3, T=T)
    assert min_time_search(family, 1 / 16) == 0.0


def test_min_time_search_respects_general_bound():
    family = lambda T: build_search_problem(6, 9, E1=1.0, T=T, schedule="local")
    T = min_time_search(family, 0.5)
    assert T >= general_T_bound(0.5, 64, 1, 1.0, 1)
    assert evolve(family(T))[1]["success"][-1] >= 0.5


def test_min_time_search_n8_reaches_half():
    family = lambda T: build_search_problem(8, 77, E1=1.0, T=T, schedule="local")
    T = min_time_search(family, 0.5)
    assert evolve(family(T))[1]["success"][-1] >= 0.5
    assert evolve(family(T * 0.97))[1]["success"][-1] < 0.5  # bracket is tight to ~tol_rel


def test_min_time_search_unreachable():
    # E1 = 0: H1 vanishes, nothing ever drives amplitude toward w.
    family = lambda T: build_projector_problem(4, 3, np.zeros(16), E1=0.0, T=T)
    with pytest.raises(UnreachableTargetError):
        min_time_search(family, 0.5, T_cap=64.0)


def test_min_time_search_argument_checks():
    family = lambda T: build_search_problem(3, 1, T=T)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            min_time_search(family, bad)
