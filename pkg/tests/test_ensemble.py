import csv

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_formation.digraph import GraphSchedule, complete_graph, cycle_graph, reversed_graph
from ensemble_formation.ensemble import (
    EdgeControl,
    ExtendedDynamics,
    IntegrationError,
    MatrixDynamics,
    MonomialControl,
    OriginalDynamics,
    ParameterizationSet,
    Rho,
    SigmaGrid,
    check_separation,
    eval_monomial,
    expm_series,
    integrate,
    monomial_values,
    monomials_up_to,
    vector_field_extended,
    vector_field_original,
)
from ensemble_formation.stochastic_lie import astar_basis

P = ParameterizationSet((Rho("constant"), Rho("coordinate")))
GRID = SigmaGrid.box(0, 1, 5)
C4 = cycle_graph(4)


def random_edge_control(g, r, rng, K=11, T=1.0):
    edges = g.sorted_edges
    return EdgeControl(tuple(edges), np.linspace(0, T, K), rng.uniform(-1, 1, (len(edges), r, K)))


def test_builtin_parameterizations():
    s = np.array([0.0, 0.5, 1.0])
    assert np.allclose(Rho("affine", {"a": 1, "b": 2})(s), [1, 2, 3])
    assert np.allclose(Rho("polynomial", {"coeffs": [1, 0, 1]})(s), [1, 1.25, 2])
    assert np.allclose(Rho("exponential", {"a": 2, "b": 1})(s), 2 * np.exp(s))
    assert Rho.from_dict(Rho("affine", {"a": 1}).to_dict()) == Rho("affine", {"a": 1})
    with pytest.raises(ValueError):
        Rho("bogus")


def test_two_dimensional_grid():
    g = SigmaGrid.box([0, 0], [1, 2], [2, 3])
    assert g.M == 6 and g.dim == 2
    r = Rho("coordinate", {"index": 1})
    assert np.allclose(r(g.samples), [0, 1, 2, 0, 1, 2])
    with pytest.raises(ValueError):
        SigmaGrid(np.array([[0.0], [0.0]]))


def test_separation_examples():
    rep = check_separation(P, GRID)
    assert rep.ok and set(rep.witnesses.values()) == {1}
    assert not check_separation(ParameterizationSet((Rho("constant"),)), GRID).ok
    sq = ParameterizationSet((Rho("polynomial", {"coeffs": [0, 0, 1]}), Rho("constant")), nonzero_index=1)
    rep = check_separation(sq, SigmaGrid(np.array([-1.0, 1.0])))
    assert not rep.ok and rep.unseparated == [(0, 1)]


def test_eval_monomial():
    assert eval_monomial([0, 0], P, 0.3) == 1.0
    assert eval_monomial([0, 3], P, 2.0) == 8.0
    q = ParameterizationSet((Rho("coordinate"), Rho("constant")), nonzero_index=1)
    with pytest.raises(ValueError):
        eval_monomial([-2, 0], q, 1.0)
    assert eval_monomial([0, -2], ParameterizationSet((Rho("coordinate"), Rho("constant", {"value": 2}))
                                                      , nonzero_index=1), 1.0) == 0.25


def test_monomials_up_to():
    e = monomials_up_to(2, 2)
    assert e.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    assert monomials_up_to(2, 3, lo=3).sum(axis=1).tolist() == [3, 3, 3, 3]
    assert monomial_values(e, P, GRID.samples).shape == (6, 5)


def test_monomial_control_degree_invariant():
    with pytest.raises(ValueError):
        MonomialControl(np.zeros((1, 2), int), [0.0, 1.0], np.ones((5, 1, 2)), min_degree=5)
    mc = MonomialControl([[5, 0]], [0.0, 1.0], np.ones((5, 1, 2)), min_degree=5)
    assert mc.gamma == 5


def test_control_interpolation():
    mc = MonomialControl([[1, 0]], [0.0, 1.0], np.array([[[0.0, 2.0]]]), min_degree=1)
    assert mc.at(0.25)[0, 0] == 0.5
    assert mc.at(1.0)[0, 0] == 2.0
    assert mc.at(2.0)[0, 0] == 2.0  # held after the last sample


def test_vector_field_original_examples():
    x = np.random.default_rng(0).standard_normal((4, 2))
    edges = C4.sorted_edges
    assert not vector_field_original(x, C4, P, 0.5, edges, np.zeros((4, 2))).any()
    cons = np.ones((4, 1)) * np.array([[1.0, -2.0]])
    u = np.random.default_rng(1).standard_normal((4, 2))
    assert np.allclose(vector_field_original(cons, C4, P, 0.5, edges, u), 0)
    u = np.zeros((4, 2))
    u[edges.index((1, 2)), 0] = 1
    out = vector_field_original(x, C4, P, 0.5, edges, u)
    assert np.allclose(out[0], x[1] - x[0]) and not out[1:].any()


def test_vector_field_extended_examples():
    B = astar_basis(4)
    x = np.random.default_rng(0).standard_normal((4, 2))
    zero = MonomialControl([[5, 0]], [0.0], np.zeros((11, 1, 1)), min_degree=5)
    assert not vector_field_extended(x, B, P, 0.5, zero, 0.0).any()
    one = MonomialControl([[5, 1]], [0.0], np.ones((11, 1, 1)), min_degree=5)
    cons = np.ones((4, 2))
    assert np.allclose(vector_field_extended(cons, B, P, 0.5, one, 0.0), 0)
    expect = 0.5 * sum(B) @ x
    assert np.allclose(vector_field_extended(x, B, P, 0.5, one, 0.0), expect)


def test_original_dynamics_matches_pointwise_field():
    rng = np.random.default_rng(2)
    ctrl = random_edge_control(C4, 2, rng)
    dyn = OriginalDynamics(P, GRID, ctrl)
    X = rng.standard_normal((GRID.M, 4, 2))
    out = dyn.rhs(0.37, X, C4)
    for m, s in enumerate(GRID.samples[:, 0]):
        assert np.allclose(out[m], vector_field_original(X[m], C4, P, s, ctrl.edges, ctrl.at(0.37)))


def test_zero_controls_constant():
    X0 = np.random.default_rng(0).standard_normal((GRID.M, 4, 2))
    ctrl = EdgeControl.constant(C4.sorted_edges, np.zeros((4, 2)))
    tr = integrate(X0, OriginalDynamics(P, GRID, ctrl), GraphSchedule.static(C4, 1.0), 0.01)
    assert np.array_equal(tr.states[-1], X0)


def test_invariances():
    rng = np.random.default_rng(4)
    sched = GraphSchedule(((0.0, C4), (0.5, reversed_graph(C4))), 1.0)
    ctrl = EdgeControl(tuple(sorted(C4.edges | reversed_graph(C4).edges)), np.linspace(0, 1, 21),
                       rng.uniform(-2, 2, (8, 2, 21)))
    dyn = OriginalDynamics(P, GRID, ctrl)
    c = rng.standard_normal((1, 1, 2))
    cons = np.broadcast_to(c, (GRID.M, 4, 2)).copy()
    drift = integrate(cons, dyn, sched, 1e-3).states - cons
    assert np.abs(drift).max() < 1e-12
    X0 = rng.standard_normal((GRID.M, 4, 2))
    base = integrate(X0, dyn, sched, 1e-3).states
    shifted = integrate(X0 + cons, dyn, sched, 1e-3).states
    assert np.abs(shifted - base - cons).max() < 1e-10
    doubled = integrate(2 * X0, dyn, sched, 1e-3).states
    assert np.abs(doubled - 2 * base).max() < 1e-10


def test_frozen_generator_matches_matrix_exponential():
    rng = np.random.default_rng(5)
    G = rng.standard_normal((3, 4, 4))
    X0 = rng.standard_normal((3, 4, 2))
    tr = integrate(X0, MatrixDynamics(G), GraphSchedule.static(C4, 1.0), 1e-3)
    for m in range(3):
        assert np.abs(tr.final[m] - scipy.linalg.expm(G[m]) @ X0[m]).max() < 1e-8


def test_expm_series_oracle():
    rng = np.random.default_rng(6)
    for scale in (0.1, 1.0, 5.0):
        A = scale * rng.standard_normal((4, 4))
        assert np.allclose(expm_series(A), scipy.linalg.expm(A), rtol=1e-12, atol=1e-12)


def test_rk4_order():
    rng = np.random.default_rng(7)
    G = rng.standard_normal((1, 4, 4))
    X0 = rng.standard_normal((1, 4, 2))
    exact = scipy.linalg.expm(G[0]) @ X0[0]
    errs = [np.abs(integrate(X0, MatrixDynamics(G), GraphSchedule.static(C4, 1.0), dt).final[0] - exact).max()
            for dt in (0.1, 0.05, 0.025, 0.0125)]
    slopes = -np.diff(np.log2(errs))
    assert np.all((slopes > 3.7) & (slopes < 4.3))


def test_switch_times_snap_and_apply():
    r = reversed_graph(C4)
    sched = GraphSchedule(((0.0, C4), (0.3, r)), 1.0)
    ctrl = EdgeControl.constant(sorted(C4.edges | r.edges), np.ones((8, 1)))
    p1 = ParameterizationSet((Rho("constant"),))
    grid = SigmaGrid(np.array([0.0]))
    X0 = np.random.default_rng(0).standard_normal((1, 4, 2))
    tr = integrate(X0, OriginalDynamics(p1, grid, ctrl), sched, 0.01)
    assert tr.switch_steps == [0, 30]
    L1 = -np.eye(4) + np.roll(np.eye(4), 1, axis=1)
    L2 = -np.eye(4) + np.roll(np.eye(4), -1, axis=1)
    exact = scipy.linalg.expm(0.7 * L2) @ scipy.linalg.expm(0.3 * L1) @ X0[0]
    assert np.abs(tr.final[0] - exact).max() < 1e-8


def test_jobs_bitwise_identical_and_permutation():
    rng = np.random.default_rng(8)
    grid = SigmaGrid.box(0, 1, 7)
    B = astar_basis(4)
    e = monomials_up_to(2, 6, lo=5)
    mc = MonomialControl(e, np.linspace(0, 1, 41), rng.standard_normal((11, len(e), 41)), min_degree=5)
    dyn = ExtendedDynamics(P, grid, [(B, mc)])
    X0 = rng.standard_normal((7, 4, 2))
    sched = GraphSchedule.static(C4, 1.0)
    a = integrate(X0, dyn, sched, 0.01)
    for jobs in (2, 3, 7):
        assert np.array_equal(integrate(X0, dyn, sched, 0.01, jobs=jobs).states, a.states)
    perm = rng.permutation(7)
    pd = ExtendedDynamics(P, grid.subset(perm), [(B, mc)])
    b = integrate(X0[perm], pd, sched, 0.01)
    assert np.array_equal(b.states, a.states[:, perm])


def test_blow_up_reports_time_and_sample():
    G = np.zeros((2, 2, 2))
    G[1] = 1e5 * np.eye(2)
    with pytest.raises(IntegrationError) as exc:
        integrate(np.ones((2, 2, 1)), MatrixDynamics(G), GraphSchedule.static(complete_graph(2), 10.0), 0.1)
    assert exc.value.sample == 1 and exc.value.t > 0


def test_step_must_divide_horizon():
    with pytest.raises(ValueError):
        integrate(np.ones((1, 4, 2)), MatrixDynamics(np.zeros((1, 4, 4))), GraphSchedule.static(C4, 1.0), 0.3)


def test_trajectory_csv(tmp_path):
    X0 = np.arange(8.0).reshape(1, 4, 2)
    tr = integrate(X0, MatrixDynamics(np.zeros((1, 4, 4))), GraphSchedule.static(C4, 0.2), 0.1)
    tr.write_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "sigma_index", "agent", "coordinate", "value"]
    assert len(rows) == 1 + 3 * 8
    assert rows[2] == ["0.0", "0", "1", "2", "1.0"]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_linearity_property(seed):
    rng = np.random.default_rng(seed)
    ctrl = random_edge_control(C4, 2, rng)
    dyn = OriginalDynamics(P, GRID, ctrl)
    X0, Y0 = rng.standard_normal((2, GRID.M, 4, 2))
    sched = GraphSchedule.static(C4, 0.5)
    a = integrate(X0, dyn, sched, 0.01).final
    b = integrate(Y0, dyn, sched, 0.01).final
    c = integrate(X0 - 3 * Y0, dyn, sched, 0.01).final
    assert np.abs(c - (a - 3 * b)).max() < 1e-10
