import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adiabatic_limits.hilbert import BitString, DimensionError
from adiabatic_limits.satio import (
    CnfFormula,
    DimacsError,
    ShortClauseWarning,
    h_table,
    h_weight,
    parse_dimacs,
    read_dimacs,
    satisfying_assignments,
    variable_degrees,
    violated_count,
    violation_table,
)

from .oracles import truth_table_violations

ONE = CnfFormula(3, ((1, 2, 3),))
TWO = CnfFormula(3, ((1, 2, 3), (-1, 2, 3)))


def test_parse_single_clause():
    cnf = parse_dimacs("p cnf 3 1\n1 2 3 0\n")
    assert cnf.n_vars == 3 and cnf.clauses == ((1, 2, 3),)


def test_parse_two_clauses_with_comments():
    cnf = parse_dimacs("c hello\nc world\np cnf 3 2\n1 2 3 0\n-1 2 3 0\n")
    assert cnf.clauses == ((1, 2, 3), (-1, 2, 3))


@pytest.mark.filterwarnings("ignore::adiabatic_limits.satio.ShortClauseWarning")
def test_parse_clause_spanning_lines_and_percent_trailer():
    cnf = parse_dimacs("p cnf 4 2\n1 -2\n 3 0 2 4 0\n%\n0\n")
    assert cnf.clauses == ((1, -2, 3), (2, 4))


@pytest.mark.filterwarnings("ignore::adiabatic_limits.satio.ShortClauseWarning")
def test_parse_collapses_duplicate_literals_and_keeps_duplicate_clauses():
    cnf = parse_dimacs("p cnf 3 2\n1 1 2 0\n1 2 0\n")
    assert cnf.clauses == ((1, 2), (1, 2))
    assert list(variable_degrees(cnf)) == [2, 2, 0]


@pytest.mark.parametrize(
    "text, pattern, line",
    [
        ("p cnf 2 1\n1 -1 0\n", "tautolog", 2),
        ("1 2 3 0\n", "header", 1),
        ("c only\n", "missing", None),
        ("p cnf 3 1\n1 4 0\n", "out of range", 2),
        ("p cnf 4 1\nc x\n1 2 3 4 0\n", "literals", 3),
        ("p cnf 3 2\n1 2 3 0\n", "declares 2", None),
        ("p dnf 3 1\n1 2 3 0\n", "header", 1),
        ("p cnf 3 1\n1 x 3 0\n", "token", 2),
    ],
)
def test_parse_errors(text, pattern, line):
    with pytest.raises(DimacsError, match=pattern) as info:
        parse_dimacs(text)
    assert info.value.line == line


def test_short_clauses_warn():
    with pytest.warns(ShortClauseWarning):
        parse_dimacs("p cnf 2 1\n1 2 0\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_dimacs("p cnf 3 1\n1 2 3 0\n")


def test_read_dimacs(tmp_path):
    path = tmp_path / "f.cnf"
    path.write_text(TWO.to_dimacs())
    assert read_dimacs(path) == TWO


def test_violated_count_examples():
    assert violated_count(ONE, BitString.parse("000")) == 1
    assert violated_count(TWO, BitString.parse("100")) == 1
    assert violated_count(TWO, BitString.parse("010")) == 0


def test_violated_count_shape():
    with pytest.raises(DimensionError):
        violated_count(ONE, BitString(4, 0))


def test_degrees():
    assert list(variable_degrees(ONE)) == [1, 1, 1]
    assert list(variable_degrees(TWO)) == [2, 2, 2]
    assert list(variable_degrees(CnfFormula(4, ((1, 2, 3),)))) == [1, 1, 1, 0]


def test_h_weight_examples():
    assert h_weight(TWO, 0) == 0
    assert h_weight(TWO, BitString.parse("110")) == 4
    assert h_weight(TWO, 0b111) == 3 * len(TWO.clauses)
    assert h_weight(ONE, BitString.parse("110")) == 2


cnf_strategy = st.integers(1, 8).flatmap(
    lambda n: st.builds(
        CnfFormula,
        st.just(n),
        st.lists(
            st.lists(st.integers(1, n), min_size=1, max_size=min(3, n), unique=True).flatmap(
                lambda vs: st.tuples(*[st.sampled_from((v, -v)) for v in vs])
            ),
            min_size=1,
            max_size=12,
        ).map(tuple),
    )
)


@given(cnf_strategy)
def test_tables_match_truth_table_oracle(cnf):
    oracle = truth_table_violations(cnf.n_vars, cnf.clauses)
    table = violation_table(cnf)
    assert np.array_equal(table, oracle)
    assert all(violated_count(cnf, z) == oracle[z] for z in range(1 << cnf.n_vars))
    assert set(satisfying_assignments(cnf)) == set(np.flatnonzero(oracle == 0))


@given(cnf_strategy)
def test_degree_and_weight_invariants(cnf):
    d = variable_degrees(cnf)
    assert d.sum() == sum(len(c) for c in cnf.clauses)
    table = h_table(cnf)
    assert table[0] == 0 == h_weight(cnf, 0)
    for z in range(1 << cnf.n_vars):
        assert table[z] == h_weight(cnf, z)


def test_truth_table_oracle_on_twelve_variables():
    rng = np.random.default_rng(5)
    clauses = tuple(
        tuple(int(v) * int(s) for v, s in zip(rng.choice(12, 3, replace=False) + 1, rng.choice((-1, 1), 3)))
        for _ in range(40)
    )
    cnf = CnfFormula(12, clauses)
    assert np.array_equal(violation_table(cnf), truth_table_violations(12, clauses))
