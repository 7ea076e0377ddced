"""DIMACS CNF ingestion and the clause functions behind the 3SAT Hamiltonians.

Variable ``i`` (1-based) is bit ``i - 1`` of a basis index.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hilbert import BitString, DimensionError

MAX_CLAUSE_WIDTH = 3


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ShortClauseWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CnfFormula:
    n_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        clauses = tuple(_normalize_clause(c, self.n_vars) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.n_vars < 1:
            raise ValueError(f"n_vars must be >= 1, got {self.n_vars}")

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def _normalize_clause(clause, n_vars: int, line: int | None = None) -> tuple[int, ...]:
    # Duplicate literals collapse; order of first appearance is kept.
    lits = tuple(dict.fromkeys(int(x) for x in clause))
    if not lits:
        raise DimacsError("empty clause", line)
    for lit in lits:
        if lit == 0 or abs(lit) > n_vars:
            raise DimacsError(f"literal {lit} out of range 1..{n_vars}", line)
        if -lit in lits:
            raise DimacsError(f"tautological clause contains {abs(lit)} and -{abs(lit)}", line)
    if len(lits) > MAX_CLAUSE_WIDTH:
        raise DimacsError(f"clause has {len(lits)} literals, at most {MAX_CLAUSE_WIDTH} allowed", line)
    return lits


def parse_dimacs(text: str) -> CnfFormula:
    n_vars = n_clauses = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    start_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if n_vars is not None:
                raise DimacsError("duplicate header", lineno)
            fields = line.split()
            if len(fields) != 4 or fields[1] != "cnf":
                raise DimacsError(f"bad header {line!r}", lineno)
            try:
                n_vars, n_clauses = int(fields[2]), int(fields[3])
            except ValueError:
                raise DimacsError(f"bad header {line!r}", lineno) from None
            if n_vars < 1 or n_clauses < 0:
                raise DimacsError(f"bad header counts {n_vars} {n_clauses}", lineno)
            continue
        if n_vars is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}", lineno) from None
            if start_line is None:
                start_line = lineno
            if lit == 0:
                clauses.append(_normalize_clause(current, n_vars, start_line))
                current, start_line = [], None
            else:
                current.append(lit)
    if n_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        clauses.append(_normalize_clause(current, n_vars, start_line))
    if len(clauses) != n_clauses:
        raise DimacsError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    short = sum(len(c) < MAX_CLAUSE_WIDTH for c in clauses)
    if short:
        warnings.warn(f"{short} clause(s) have fewer than 3 literals", ShortClauseWarning, stacklevel=2)
    return CnfFormula(n_vars, tuple(clauses))


def read_dimacs(path: str | Path) -> CnfFormula:
    return parse_dimacs(Path(path).read_text())


def _assignment(cnf: CnfFormula, z: int | BitString) -> int:
    if isinstance(z, BitString) and z.n != cnf.n_vars:
        raise DimensionError(f"assignment has {z.n} bits, formula has {cnf.n_vars} variables")
    value = int(z)
    if not 0 <= value < (1 << cnf.n_vars):
        raise DimensionError(f"assignment {value} outside {{0,1}}^{cnf.n_vars}")
    return value


def violated_count(cnf: CnfFormula, z: int | BitString) -> int:
    value = _assignment(cnf, z)
    count = 0
    for clause in cnf.clauses:
        if not any(((value >> (abs(lit) - 1)) & 1) == (lit > 0) for lit in clause):
            count += 1
    return count


def violation_table(cnf: CnfFormula) -> np.ndarray:
    """v(z) for every z at once."""
    z = np.arange(1 << cnf.n_vars, dtype=np.int64)
    table = np.zeros(z.size, dtype=np.int64)
    for clause in cnf.clauses:
        satisfied = np.zeros(z.size, dtype=bool)
        for lit in clause:
            bit = (z >> (abs(lit) - 1)) & 1
            satisfied |= bit == (1 if lit > 0 else 0)
        table += ~satisfied
    return table


def variable_degrees(cnf: CnfFormula) -> np.ndarray:
    """``d[i-1]`` counts the clauses mentioning variable ``i``."""
    d = np.zeros(cnf.n_vars, dtype=np.int64)
    for clause in cnf.clauses:
        for lit in clause:
            d[abs(lit) - 1] += 1
    return d


def h_weight(cnf: CnfFormula, z: int | BitString) -> int:
    value = _assignment(cnf, z)
    d = variable_degrees(cnf)
    return int(sum(d[i] for i in range(cnf.n_vars) if (value >> i) & 1))


def h_table(cnf: CnfFormula) -> np.ndarray:
    z = np.arange(1 << cnf.n_vars, dtype=np.int64)
    table = np.zeros(z.size, dtype=np.int64)
    for i, d in enumerate(variable_degrees(cnf)):
        table += d * ((z >> i) & 1)
    return table


def satisfying_assignments(cnf: CnfFormula) -> np.ndarray:
    return np.flatnonzero(violation_table(cnf) == 0)
