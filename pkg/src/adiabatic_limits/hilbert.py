"""Dense n-qubit state vectors and the fast Walsh-Hadamard transform.

Basis index ``z`` is an n-bit integer whose bit ``i`` (least significant
first) holds variable ``z_{i+1}``. The bitwise dot product is
``popcount(x & y) mod 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numba
import numpy as np

MAX_QUBITS = 26
NORM_TOL = 1e-9


class DimensionError(ValueError):
    """Raised for qubit counts outside the supported range or mismatched shapes."""


@numba.njit(cache=True)
def _butterfly(a):
    size = a.size
    h = 1
    while h < size:
        for i in range(0, size, 2 * h):
            for j in range(i, i + h):
                x = a[j]
                y = a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h *= 2
    scale = 1.0 / np.sqrt(size)
    for i in range(size):
        a[i] *= scale


def fwht_inplace(amps: np.ndarray) -> np.ndarray:
    """Apply the unitary Walsh-Hadamard transform to a contiguous complex buffer in place."""
    if amps.dtype != np.complex128 or not amps.flags.c_contiguous:
        raise TypeError("fwht_inplace needs a C-contiguous complex128 array")
    _butterfly(amps)
    return amps


def check_qubits(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count must be an integer in [1, {MAX_QUBITS}], got {n!r}")
    return int(n)


@dataclass(frozen=True)
class BitString:
    n: int
    value: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.n):
            raise DimensionError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def parse(cls, text: str) -> "BitString":
        """Read a bit string written z_1 z_2 ... z_n (variable order, left to right)."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        value = sum(1 << i for i, ch in enumerate(text) if ch == "1")
        return cls(len(text), value)

    def bit(self, i: int) -> int:
        return (self.value >> i) & 1

    def dot(self, other: "BitString") -> int:
        return bin(self.value & other.value).count("1") & 1

    def __int__(self):
        return self.value

    def __str__(self):
        return "".join(str(self.bit(i)) for i in range(self.n))


@dataclass
class StateVector:
    """Amplitudes over {0,1}^n.

    Unit norm is checked on construction unless ``check_norm=False``; that
    escape hatch is for intermediate vectors such as ``H|psi>``.
    """

    n: int
    amps: np.ndarray
    check_norm: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        check_qubits(self.n)
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n,):
            raise DimensionError(f"expected {1 << self.n} amplitudes, got shape {self.amps.shape}")
        if self.check_norm:
            err = abs(self.norm() - 1.0)
            if err > NORM_TOL:
                raise ValueError(f"state is not normalized (|norm - 1| = {err:.3e})")

    @property
    def dim(self) -> int:
        return 1 << self.n

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps.copy(), check_norm=False)

    @classmethod
    def basis(cls, n: int, z: int | BitString) -> "StateVector":
        n = check_qubits(n)
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[int(z)] = 1.0
        return cls(n, amps)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "StateVector":
        """Haar-random unit vector from normalized complex Gaussian amplitudes."""
        n = check_qubits(n)
        amps = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
        amps /= np.linalg.norm(amps)
        return cls(n, amps)


def uniform_state(n: int) -> StateVector:
    n = check_qubits(n)
    size = 1 << n
    return StateVector(n, np.full(size, 1.0 / np.sqrt(size), dtype=np.complex128))


def fwht(state: StateVector) -> StateVector:
    out = state.amps.copy()
    fwht_inplace(out)
    return StateVector(state.n, out, check_norm=False)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.n != b.n:
        raise DimensionError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    return complex(np.vdot(a.amps, b.amps))


def prob_mass(state: StateVector, targets: Iterable[int | BitString]) -> float:
    idx = _target_indices(state.n, targets)
    if idx.size == 0:
        return 0.0
    return float(np.sum(np.abs(state.amps[idx]) ** 2))


def _target_indices(n: int, targets: Iterable[int | BitString]) -> np.ndarray:
    out = []
    for t in targets:
        if isinstance(t, BitString) and t.n != n:
            raise DimensionError(f"target {t} has length {t.n}, state has {n} qubits")
        v = int(t)
        if not 0 <= v < (1 << n):
            raise DimensionError(f"target {v} outside [0, 2^{n})")
        out.append(v)
    return np.asarray(sorted(set(out)), dtype=np.int64)

