from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot.linalg import (
    RowEchelon,
    format_rational,
    matmul,
    nullspace,
    parse_rational,
    rank,
    solve,
    sparse_nullspace,
    transpose,
)

small = st.integers(-4, 4)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r)))


@pytest.mark.parametrize("text,value", [("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), (" 6/8 ", Fraction(3, 4)),
                                        (5, Fraction(5)), (Fraction(1, 3), Fraction(1, 3))])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["1/0", "abc", 0.5, True, "1.5"])
def test_parse_rational_rejects(bad):
    with pytest.raises((ValueError, TypeError, ZeroDivisionError)):
        parse_rational(bad)


@given(st.fractions())
def test_format_parse_roundtrip(q):
    assert parse_rational(format_rational(q)) == q


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_rank_matches_sympy(rows):
    assert rank(rows) == sympy.Matrix(rows).rank()


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_nullspace_is_kernel_of_right_size(rows):
    ncols = len(rows[0])
    basis = nullspace(rows, ncols)
    assert len(basis) == ncols - rank(rows)
    for v in basis:
        assert all(sum(Fraction(a) * b for a, b in zip(row, v)) == 0 for row in rows)
    if basis:
        assert rank(basis) == len(basis)


def test_sparse_nullspace_keys():
    rows = [{"x": 1, "y": -1}, {"y": 1, "z": -2}]
    (v,) = sparse_nullspace(rows, ["x", "y", "z"])
    assert v["x"] == v["y"] == 2 * v["z"]


def test_solve_consistent_and_inconsistent():
    sol = solve([({"a": 1, "b": 1}, 3), ({"a": 1, "b": -1}, 1)])
    assert sol == {"a": 2, "b": 1}
    assert solve([({"a": 1}, 1), ({"a": 2}, 3)]) is None


def test_row_echelon_incremental_rank():
    re = RowEchelon()
    assert re.add({0: 1, 1: 2})
    assert not re.add({0: 2, 1: 4})
    assert re.add({1: 1})
    assert re.rank == 2


def test_matmul_transpose():
    a = [[1, 2], [3, 4]]
    assert matmul(a, [[1], [1]]) == ((3,), (7,))
    assert transpose(transpose(a)) == tuple(tuple(r) for r in a)
