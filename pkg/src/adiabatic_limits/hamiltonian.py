"""Partition Hamiltonians and the adiabatic problems built from them.

``H0 = sum_z F(z) |zbar><zbar|`` is diagonal in the Hadamard basis and
``H1 = sum_z E(z) |z><z|`` in the computational basis. Both are stored as
eigenvalue tables indexed by ``z``; the partition/ladder pair they came from
is kept alongside so bound evaluation can read class sizes and ``max F``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .hilbert import BitString, DimensionError, StateVector, check_qubits, fwht_inplace

Basis = Literal["computational", "hadamard"]
EXPLICIT_MAX_QUBITS = 16
SCHEDULE_KINDS = ("linear", "smoothstep", "local")


class ValidationError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    """A partition of {0,1}^n held as a class label per basis index."""

    n: int
    labels: np.ndarray

    def __post_init__(self):
        check_qubits(self.n)
        labels = np.asarray(self.labels)
        if labels.shape != (1 << self.n,):
            raise ValidationError(f"partition needs {1 << self.n} labels, got {labels.shape}")
        if labels.size and (labels.min() < 0):
            raise ValidationError("partition does not cover {0,1}^n")
        labels = np.array(labels, dtype=np.int64)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        sizes = np.bincount(labels)
        if np.any(sizes == 0):
            empty = int(np.flatnonzero(sizes == 0)[0])
            raise ValidationError(f"class {empty} is empty")
        sizes.flags.writeable = False
        object.__setattr__(self, "_sizes", sizes)

    @classmethod
    def from_classes(cls, n: int, classes: Sequence[Iterable[int | BitString]]) -> "Partition":
        n = check_qubits(n)
        if n > EXPLICIT_MAX_QUBITS:
            raise ValidationError(
                f"explicit classes are limited to n <= {EXPLICIT_MAX_QUBITS}; use from_function"
            )
        if not classes:
            raise ValidationError("a partition needs at least one class")
        labels = np.full(1 << n, -1, dtype=np.int64)
        for k, members in enumerate(classes):
            idx = np.fromiter((int(z) for z in members), dtype=np.int64)
            if idx.size == 0:
                raise ValidationError(f"class {k} is empty")
            if idx.min() < 0 or idx.max() >= (1 << n):
                raise ValidationError(f"class {k} has members outside {{0,1}}^{n}")
            if np.any(labels[idx] != -1) or np.unique(idx).size != idx.size:
                raise ValidationError(f"class {k} overlaps an earlier class")
            labels[idx] = k
        if np.any(labels == -1):
            raise ValidationError("partition does not cover {0,1}^n")
        return cls(n, labels)

    @classmethod
    def from_function(cls, n: int, class_index: Callable[[np.ndarray], np.ndarray]) -> "Partition":
        """Tabulate a vectorized ``z -> k`` map over all basis indices."""
        n = check_qubits(n)
        labels = np.asarray(class_index(np.arange(1 << n, dtype=np.int64)))
        return cls(n, labels)

    @property
    def count(self) -> int:
        return int(self._sizes.size)

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    def class_of(self, z: int | BitString) -> int:
        return int(self.labels[int(z)])

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)


@dataclass(frozen=True)
class EigenLadder:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValidationError("ladder is empty")
        if values[0] != 0.0:
            raise ValidationError(f"ladder must start at 0, starts at {values[0]}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValidationError(f"ladder is not strictly increasing: {values}")

    def __len__(self):
        return len(self.values)

    @property
    def top(self) -> float:
        return self.values[-1]


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    """``offset * I + sum_k ladder[k] * projector(class k)`` in the tagged basis.

    ``offset`` is zero except for final Hamiltonians of unsatisfiable CNF
    instances, whose violation count never reaches zero.
    """

    basis: Basis
    table: np.ndarray
    partition: Partition
    ladder: EigenLadder
    offset: float = 0.0

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def max_value(self) -> float:
        return self.offset + self.ladder.top


def make_diagonal(partition: Partition, ladder: EigenLadder, basis: Basis) -> DiagonalHamiltonian:
    if basis not in ("computational", "hadamard"):
        raise ValidationError(f"unknown basis {basis!r}")
    if len(ladder) != partition.count:
        raise ValidationError(
            f"ladder has {len(ladder)} values but partition has {partition.count} classes"
        )
    table = np.asarray(ladder.values, dtype=np.float64)[partition.labels]
    table.flags.writeable = False
    return DiagonalHamiltonian(basis, table, partition, ladder)


def diagonal_from_table(
    table: np.ndarray, basis: Basis, allow_offset: bool = False
) -> DiagonalHamiltonian:
    """Canonicalize an eigenvalue table: distinct values sorted ascending become the ladder."""
    table = np.asarray(table, dtype=np.float64)
    size = table.size
    n = size.bit_length() - 1
    if size < 2 or (1 << n) != size:
        raise DimensionError(f"table length {size} is not 2^n for n >= 1")
    values, labels = np.unique(table, return_inverse=True)
    offset = float(values[0])
    if offset != 0.0 and not allow_offset:
        raise ValidationError(f"table minimum is {offset}, expected 0")
    ham = make_diagonal(Partition(n, labels), EigenLadder(tuple(values - offset)), basis)
    if offset == 0.0:
        return ham
    raw = table.copy()
    raw.flags.writeable = False
    return dataclasses.replace(ham, table=raw, offset=offset)


def search_partition(n: int) -> Partition:
    """{0^n} versus everything else."""
    return Partition.from_function(n, lambda z: (z != 0).astype(np.int64))


def block_partition(n: int, blocks: int) -> Partition:
    """``blocks`` equal classes keyed by the top log2(blocks) bits; 0^n lands in class 0."""
    n = check_qubits(n)
    bits = blocks.bit_length() - 1
    if blocks < 1 or (1 << bits) != blocks or bits > n:
        raise ValidationError(f"blocks must be a power of two no larger than 2^{n}")
    return Partition.from_function(n, lambda z: z >> (n - bits))


def shuffled_partition(n: int, sizes: Sequence[int], rng: np.random.Generator) -> Partition:
    """Random partition with the given class sizes, with 0^n forced into class 0."""
    n = check_qubits(n)
    if sum(sizes) != (1 << n) or min(sizes) < 1:
        raise ValidationError(f"class sizes {list(sizes)} do not partition 2^{n} points")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    rest = rng.permutation(labels[1:])
    return Partition(n, np.concatenate(([0], rest)))


def h_search_table(n: int) -> np.ndarray:
    return make_diagonal(search_partition(n), EigenLadder((0.0, 1.0)), "hadamard").table


@dataclass(frozen=True)
class Schedule:
    """Interpolation s(t) on [0, T].

    ``local`` is the Roland-Cerf schedule tuned to the gap of the search
    Hamiltonian on ``n`` qubits; it needs ``n``. ``T == 0`` is allowed and
    means no evolution at all.
    """

    kind: str = "linear"
    T: float = 1.0
    n: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if not np.isfinite(self.T) or self.T < 0:
            raise ValidationError(f"total time must be finite and >= 0, got {self.T}")
        if self.kind == "local" and self.n is None:
            raise ValidationError("the local schedule needs the qubit count")

    def s(self, t):
        if self.T == 0:
            return np.zeros_like(np.asarray(t, dtype=np.float64))[()]
        x = np.clip(np.asarray(t, dtype=np.float64) / self.T, 0.0, 1.0)
        if self.kind == "linear":
            out = x
        elif self.kind == "smoothstep":
            out = x * x * (3.0 - 2.0 * x)
        else:
            root = np.sqrt((1 << self.n) - 1.0)
            if root == 0:
                out = x
            else:
                half_width = np.arctan(root)
                out = 0.5 + np.tan((2.0 * x - 1.0) * half_width) / (2.0 * root)
                out = np.clip(out, 0.0, 1.0)
        return out[()] if isinstance(out, np.ndarray) else out

    def with_T(self, T: float) -> "Schedule":
        return dataclasses.replace(self, T=float(T))


@dataclass(frozen=True, eq=False)
class AdiabaticProblem:
    n: int
    H0: DiagonalHamiltonian
    H1: DiagonalHamiltonian
    schedule: Schedule
    solutions: frozenset[int]
    kind: str = "general"
    E1: float | None = None
    target: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "solutions", frozenset(int(w) for w in self.solutions))
        if self.H0.basis != "hadamard" or self.H1.basis != "computational":
            raise ValidationError("H0 must be Hadamard-diagonal and H1 computational-diagonal")
        if self.H0.n != self.n or self.H1.n != self.n:
            raise DimensionError("Hamiltonian sizes do not match the problem")
        if self.H0.table[0] != 0.0:
            raise ValidationError("the uniform state must be a ground state of H0 (F(0^n) = 0)")
        for w in self.solutions:
            if not 0 <= w < (1 << self.n):
                raise DimensionError(f"solution {w} outside {{0,1}}^{self.n}")
            if self.H1.table[w] != 0.0:
                raise ValidationError(f"H1 does not vanish on solution {w}")

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def T(self) -> float:
        return self.schedule.T

    @property
    def max_energy(self) -> float:
        return max(self.H0.max_value, self.H1.max_value)

    @property
    def is_projector(self) -> bool:
        """True when H1 = E1 (I - |w><w|) for a single marked string."""
        return self.kind in ("search", "projector")

    def with_T(self, T: float) -> "AdiabaticProblem":
        return dataclasses.replace(self, schedule=self.schedule.with_T(T))


def _make_schedule(kind: str, T: float, n: int) -> Schedule:
    return Schedule(kind, float(T), n if kind == "local" else None)


def _projector_H1(n: int, w: int, E1: float) -> DiagonalHamiltonian:
    if E1 < 0:
        raise ValidationError(f"E1 must be >= 0, got {E1}")
    if E1 == 0:
        return make_diagonal(Partition(n, np.zeros(1 << n, dtype=np.int64)), EigenLadder((0.0,)), "computational")
    labels = np.ones(1 << n, dtype=np.int64)
    labels[w] = 0
    return make_diagonal(Partition(n, labels), EigenLadder((0.0, float(E1))), "computational")


def _bit_value(n: int, w: int | BitString | str) -> int:
    if isinstance(w, str):
        w = BitString.parse(w)
    if isinstance(w, BitString) and w.n != n:
        raise DimensionError(f"marked string {w} has length {w.n}, expected {n}")
    value = int(w)
    if not 0 <= value < (1 << n):
        raise DimensionError(f"marked string {value} outside {{0,1}}^{n}")
    return value


def build_search_problem(
    n: int, w: int | BitString | str, E1: float = 1.0, T: float = 1.0, schedule: str = "linear"
) -> AdiabaticProblem:
    n = check_qubits(n)
    w = _bit_value(n, w)
    H0 = make_diagonal(search_partition(n), EigenLadder((0.0, 1.0)), "hadamard")
    return AdiabaticProblem(
        n, H0, _projector_H1(n, w, E1), _make_schedule(schedule, T, n), frozenset({w}),
        kind="search", E1=float(E1), target=w,
    )


def build_projector_problem(
    n: int,
    w: int | BitString | str,
    F_table: np.ndarray | DiagonalHamiltonian,
    E1: float = 1.0,
    T: float = 1.0,
    schedule: str = "linear",
) -> AdiabaticProblem:
    n = check_qubits(n)
    w = _bit_value(n, w)
    if isinstance(F_table, DiagonalHamiltonian):
        H0 = F_table
        if H0.basis != "hadamard":
            raise ValidationError("F table must come from a Hadamard-basis Hamiltonian")
    else:
        table = np.asarray(F_table, dtype=np.float64)
        if table.shape != (1 << n,):
            raise DimensionError(f"F table needs {1 << n} entries, got {table.shape}")
        if table[0] != 0.0:
            raise ValidationError(f"F(0^n) must be 0, got {table[0]}")
        H0 = diagonal_from_table(table, "hadamard")
    return AdiabaticProblem(
        n, H0, _projector_H1(n, w, E1), _make_schedule(schedule, T, n), frozenset({w}),
        kind="projector", E1=float(E1), target=w,
    )


def build_general_problem(
    H0: DiagonalHamiltonian, H1: DiagonalHamiltonian, T: float = 1.0, schedule: str = "linear"
) -> AdiabaticProblem:
    """Problem whose solution set is the zero-energy class of H1."""
    n = H0.n
    solutions = frozenset(int(z) for z in np.flatnonzero(H1.table == 0.0))
    return AdiabaticProblem(n, H0, H1, _make_schedule(schedule, T, n), solutions)


def build_3sat_problem(cnf, T: float = 1.0, schedule: str = "linear") -> AdiabaticProblem:
    from .satio import h_table, violation_table

    if not cnf.clauses:
        raise ValidationError("formula has no clauses")
    n = check_qubits(cnf.n_vars)
    H1 = diagonal_from_table(violation_table(cnf), "computational", allow_offset=True)
    H0 = diagonal_from_table(h_table(cnf), "hadamard")
    solutions = frozenset(int(z) for z in np.flatnonzero(H1.table == 0.0))
    return AdiabaticProblem(n, H0, H1, _make_schedule(schedule, T, n), solutions, kind="sat")


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"interpolation parameter must lie in [0, 1], got {s}")
    return s


def apply_h_array(F: np.ndarray, E: np.ndarray, s: float, amps: np.ndarray) -> np.ndarray:
    """``(1-s) W diag(F) W amps + s diag(E) amps`` on raw arrays."""
    tmp = np.array(amps, dtype=np.complex128, copy=True)
    fwht_inplace(tmp)
    tmp *= F
    fwht_inplace(tmp)
    tmp *= 1.0 - s
    tmp += s * E * amps
    return tmp


def apply_H(problem: AdiabaticProblem, s: float, psi: StateVector) -> StateVector:
    s = _check_s(s)
    if psi.n != problem.n:
        raise DimensionError(f"state has {psi.n} qubits, problem has {problem.n}")
    out = apply_h_array(problem.H0.table, problem.H1.table, s, psi.amps)
    return StateVector(problem.n, out, check_norm=False)


def largest_class_index(partition: Partition) -> int:
    return int(np.argmax(partition.sizes))


def complement_dim(H0: DiagonalHamiltonian) -> int:
    """Dimension of the orthogonal complement of H0's largest eigenspace."""
    part = H0.partition
    return int((1 << part.n) - part.sizes[largest_class_index(part)])
