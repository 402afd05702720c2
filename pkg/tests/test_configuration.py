import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_formation.configuration import (
    DegenerateConfigurationError,
    constructive_basis,
    from_json,
    is_nondegenerate,
    simplex_subset,
    span_rank_Lstar,
    to_json,
)
from ensemble_formation.stochastic_lie import astar_basis, primary_matrix

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def exact_rank(vectors):
    return sympy.Matrix([[sympy.Rational(v) for v in row] for row in vectors]).rank()


def test_nondegenerate_examples():
    assert not is_nondegenerate(np.array([[0, 0], [1, 1], [2, 2], [3, 3.0]]))
    assert is_nondegenerate(np.vstack([np.zeros(3), np.eye(3)]))
    assert is_nondegenerate(np.random.default_rng(0).standard_normal((5, 3)))
    with pytest.raises(ValueError):
        is_nondegenerate(np.zeros((1, 2)))


def test_nondegeneracy_independent_of_reference_agent():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal((4, 3))
        assert is_nondegenerate(x) == is_nondegenerate(x[::-1])


def test_simplex_subset():
    assert simplex_subset(SQUARE) == [0, 1, 2]
    assert simplex_subset(np.vstack([np.zeros(3), np.eye(3)])) == [0, 1, 2, 3]
    # agent 1 coincides with agent 0 and is skipped
    x = np.array([[0, 0], [0, 0], [1, 0], [0, 1.0]])
    assert simplex_subset(x) == [0, 2, 3]
    with pytest.raises(DegenerateConfigurationError):
        simplex_subset(np.array([[0, 0], [1, 1], [2, 2.0]]))


def test_span_rank_examples():
    assert span_rank_Lstar(SQUARE, astar_basis(4)).rank == 8
    x = np.array([[0, 0], [1, 0], [0, 1.0]])
    assert span_rank_Lstar(x, astar_basis(3)).rank <= 5
    rep = span_rank_Lstar(np.ones((4, 2)), astar_basis(4))
    assert rep.rank == 0 and rep.basis_indices == []


def test_span_rank_matches_exact_oracle_on_integer_configurations():
    rng = np.random.default_rng(7)
    for N, n in [(4, 2), (5, 2), (5, 3), (4, 3)]:
        B = astar_basis(N)
        for _ in range(5):
            x = rng.integers(-3, 4, size=(N, n)).astype(float)
            images = [(b @ x).ravel() for b in B]
            rep = span_rank_Lstar(x, B)
            assert rep.rank == exact_rank(images)
            assert len(rep.basis_indices) == rep.rank
            assert exact_rank([images[i] for i in rep.basis_indices]) == rep.rank


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2), st.integers(0, 2**31))
def test_full_span_above_boundary(n, extra, seed):
    N = n + 2 + extra
    x = np.random.default_rng(seed).standard_normal((N, n))
    assert span_rank_Lstar(x, astar_basis(N)).rank == N * n


def test_full_algebra_images():
    # {A x : A in the zero-row-sum algebra} is all of R^{N x n} once N > n
    rng = np.random.default_rng(11)
    for N, n in [(3, 2), (4, 3), (5, 2)]:
        x = rng.standard_normal((N, n))
        basis = [primary_matrix(N, i, j) for i in range(1, N + 1) for j in range(1, N + 1) if i != j]
        assert span_rank_Lstar(x, basis).rank == N * n


def test_constructive_basis_square():
    pairs = constructive_basis(SQUARE)
    assert len(pairs) == 8
    for A, Y in pairs:
        assert np.trace(A) == 0 and not A.sum(axis=1).any()
        assert np.allclose(A @ SQUARE, Y)
    assert exact_rank([Y.ravel() for _, Y in pairs]) == 8
    # the last n images live only in the row of the agent set aside
    for _, Y in pairs[-2:]:
        assert not Y[:3].any()


def test_constructive_basis_preconditions():
    with pytest.raises(DegenerateConfigurationError):
        constructive_basis(np.array([[0, 0], [1, 0], [0, 1.0]]))
    with pytest.raises(DegenerateConfigurationError):
        constructive_basis(np.array([[0, 0], [1, 1], [2, 2], [3, 3.0]]))


def test_constructive_basis_relabels_when_needed():
    # agents 0..2 are collinear, so a different agent is set aside
    x = np.array([[0, 0], [1, 1], [2, 2], [0, 1.0], [1, 0]])
    pairs = constructive_basis(x)
    assert len(pairs) == 10
    assert np.linalg.matrix_rank(np.array([Y.ravel() for _, Y in pairs])) == 10


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2), st.integers(0, 2**31))
def test_constructive_basis_random(n, extra, seed):
    N = n + 2 + extra
    x = np.random.default_rng(seed).standard_normal((N, n))
    pairs = constructive_basis(x)
    assert len(pairs) == N * n
    assert all(np.trace(A) == 0 for A, _ in pairs)


def test_json_roundtrip():
    d = to_json(SQUARE)
    assert d["n_agents"] == 4 and d["dim"] == 2
    assert np.array_equal(from_json(d), SQUARE)
    with pytest.raises(ValueError):
        from_json({"n_agents": 3, "dim": 2, "positions": SQUARE.tolist()})
    with pytest.raises(ValueError):
        to_json([[0.0, np.nan]])
