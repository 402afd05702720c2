from fractions import Fraction

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_formation.exact import bareiss_rank, integer_multiple, nullspace, rref

small_ints = st.integers(-4, 4)


@st.composite
def int_matrices(draw):
    r = draw(st.integers(1, 6))
    c = draw(st.integers(1, 6))
    return [[draw(small_ints) for _ in range(c)] for _ in range(r)]


@settings(max_examples=200, deadline=None)
@given(int_matrices())
def test_rank_matches_sympy(m):
    assert bareiss_rank(m) == sympy.Matrix(m).rank()


@settings(max_examples=100, deadline=None)
@given(int_matrices())
def test_nullspace_annihilates_and_has_right_size(m):
    n_cols = len(m[0])
    basis = nullspace(m, n_cols)
    assert len(basis) == n_cols - sympy.Matrix(m).rank()
    for v in basis:
        assert all(sum(Fraction(a) * b for a, b in zip(row, v)) == 0 for row in m)


def test_rational_rows():
    assert bareiss_rank([[Fraction(1, 2), Fraction(1, 3)], [3, 2]]) == 1
    assert integer_multiple([Fraction(1, 2), Fraction(1, 3)]) == [3, 2]


def test_rref_identity():
    red, piv = rref([[2, 4], [1, 3]])
    assert piv == [0, 1]
    assert red == [[1, 0], [0, 1]]


def test_empty():
    assert bareiss_rank([]) == 0
    assert len(nullspace([], 3)) == 3
