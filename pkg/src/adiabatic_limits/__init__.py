"""State-vector simulation of adiabatic algorithms with Hadamard- and
computational-diagonal Hamiltonians, plus checks of their runtime bounds."""

from .bounds import (
    BoundReport,
    beta0_floor,
    derivative_bound_value,
    general_T_bound,
    success_ceiling,
    verify_trajectory,
    zalka_slack,
)
from .evolution import IntegratorConfig, Trajectory, evolve, exact_flow_derivative, min_time_search, step_rk4, step_strang
from .hamiltonian import (
    AdiabaticProblem,
    DiagonalHamiltonian,
    EigenLadder,
    Partition,
    Schedule,
    apply_H,
    build_3sat_problem,
    build_general_problem,
    build_projector_problem,
    build_search_problem,
    largest_class_index,
    make_diagonal,
    shuffled_partition,
)
from .hilbert import BitString, StateVector, fwht, inner, prob_mass, uniform_state
from .satio import CnfFormula, h_weight, parse_dimacs, variable_degrees, violated_count

__version__ = "0.1.0"
