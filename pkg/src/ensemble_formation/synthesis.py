"""Open-loop tracking through the Lie-extended system.

Pipeline: pointwise coefficients c_i(t, sigma) with sum_i c_i A*_i X = dX/dt
on the target, a shifted monomial fit of c_i in sigma at every control time,
integration of the extended system, and an error report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .configuration import is_nondegenerate
from .digraph import Digraph, GraphSchedule, diameter, is_strongly_connected
from .ensemble import (
    ExtendedDynamics,
    MonomialControl,
    ParameterizationSet,
    SigmaGrid,
    check_separation,
    integrate,
    monomial_values,
    monomials_up_to,
)
from .stochastic_lie import LieCheckError, codist_basis


class SynthesisError(RuntimeError):
    pass


class HypothesisError(ValueError):
    def __init__(self, failures):
        super().__init__("; ".join(failures))
        self.failures = list(failures)


# --- targets ------------------------------------------------------------------

@dataclass
class TargetTrajectory:
    """X_sigma(t) as a vectorized map (t, sigmas (M, d)) -> (M, N, n)."""

    evaluator: Callable
    T: float
    derivative_fn: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, t, sigmas) -> np.ndarray:
        return np.asarray(self.evaluator(t, _samples(sigmas)), dtype=float)

    def derivative(self, t, sigmas, h: float = 1e-3) -> np.ndarray:
        if self.derivative_fn is not None:
            return np.asarray(self.derivative_fn(t, _samples(sigmas)), dtype=float)
        return (self(t + h, sigmas) - self(t - h, sigmas)) / (2 * h)


def _samples(sigmas):
    s = np.asarray(sigmas, dtype=float)
    return s.reshape(-1, 1) if s.ndim <= 1 else s


def regular_polygon(N: int, radius: float = 1.0) -> np.ndarray:
    a = 2 * np.pi * np.arange(N) / N + np.pi / 4
    return radius * np.stack([np.cos(a), np.sin(a)], axis=1)


def rotating_scaling_square(N: int = 4, omega0: float = 1.0, omega1: float = 1.0,
                            scale_rate: float = 0.0, radius: float = 1.0, T: float = 1.0,
                            index: int = 0) -> TargetTrajectory:
    """Regular N-gon (a square for N = 4) rotating at omega0 + omega1*sigma and
    scaled by 1 + scale_rate*sigma*t."""
    P = regular_polygon(N, radius)

    def parts(t, s):
        sig = s[:, index]
        th = (omega0 + omega1 * sig) * t
        c, sn = np.cos(th), np.sin(th)
        R = np.stack([np.stack([c, -sn], -1), np.stack([sn, c], -1)], -2)  # (M, 2, 2)
        return sig, R

    def X(t, s):
        sig, R = parts(t, s)
        scale = 1 + scale_rate * sig * t
        return scale[:, None, None] * np.einsum("ab,mcb->mac", P, R)

    def dX(t, s):
        sig, R = parts(t, s)
        w = omega0 + omega1 * sig
        scale = 1 + scale_rate * sig * t
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        base = np.einsum("ab,mcb->mac", P, R)
        rot = np.einsum("mac,dc->mad", base, J)  # d/dt of P R^T is w * P R^T J^T
        return (scale_rate * sig)[:, None, None] * base + (scale * w)[:, None, None] * rot

    params = dict(N=N, omega0=omega0, omega1=omega1, scale_rate=scale_rate, radius=radius, index=index)
    return TargetTrajectory(X, T, dX, "rotating-scaling-square", params)


def simplex_base(N: int, dim: int) -> np.ndarray:
    """Standard simplex vertices 0, e_1..e_dim, then extra agents on the diagonal."""
    if N < dim + 1:
        raise ValueError("need at least dim+1 agents")
    P = np.zeros((N, dim))
    P[1:dim + 1] = np.eye(dim)
    for a in range(dim + 1, N):
        P[a] = 0.7 * (a - dim) * np.ones(dim)
    return P


def translating_simplex(N: int = 4, dim: int = 2, velocity0=None, velocity1=None,
                        T: float = 1.0, index: int = 0) -> TargetTrajectory:
    """Rigid translation of a simplex-based formation with velocity v0 + v1*sigma."""
    P = simplex_base(N, dim)
    v0 = np.asarray(velocity0 if velocity0 is not None else np.ones(dim), dtype=float)
    v1 = np.asarray(velocity1 if velocity1 is not None else np.zeros(dim), dtype=float)

    def vel(s):
        return v0[None, :] + s[:, index, None] * v1[None, :]

    def X(t, s):
        return P[None] + t * vel(s)[:, None, :]

    def dX(t, s):
        return np.broadcast_to(vel(s)[:, None, :], (len(s), N, dim)).copy()

    params = dict(N=N, dim=dim, velocity0=v0.tolist(), velocity1=v1.tolist(), index=index)
    return TargetTrajectory(X, T, dX, "translating-simplex", params)


TARGETS = {
    "rotating-scaling-square": rotating_scaling_square,
    "translating-simplex": translating_simplex,
}


def make_target(name: str, params: dict, T: float) -> TargetTrajectory:
    if name not in TARGETS:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(TARGETS)}")
    return TARGETS[name](T=T, **params)


# --- coefficient solve and monomial fit ---------------------------------------

def lift_matrix(X, basis) -> np.ndarray:
    """(B, N*n, gamma) matrices whose columns are vec(A*_i X_b)."""
    X = np.asarray(X, dtype=float)
    basis = np.asarray(basis, dtype=float)
    Y = np.einsum("iab,kbc->kaci", basis, X, optimize=False)
    return Y.reshape(len(X), -1, len(basis))


def solve_coefficients_batch(X, Xdot, basis, tol: float = 1e-8, rcond: float = 1e-10):
    """Minimum-norm least squares for a stack of configurations.

    Returns (c (B, gamma), residual (B,)). Raises when a residual exceeds
    tol * max(1, |Xdot|).
    """
    X = np.asarray(X, dtype=float)
    Xdot = np.asarray(Xdot, dtype=float)
    L = lift_matrix(X, basis)
    rhs = Xdot.reshape(len(X), -1)
    c = np.einsum("bij,bj->bi", np.linalg.pinv(L, rcond=rcond), rhs, optimize=False)
    res = np.linalg.norm(np.einsum("bij,bj->bi", L, c, optimize=False) - rhs, axis=1)
    scale = np.maximum(1.0, np.linalg.norm(rhs, axis=1))
    bad = np.flatnonzero(res > tol * scale)
    if bad.size:
        raise SynthesisError(f"coefficient residual {res[bad[0]]:.3g} at batch index {int(bad[0])}; "
                             "configuration is near-degenerate")
    return c, res


def solve_coefficients(x, xdot, basis, tol: float = 1e-8):
    c, res = solve_coefficients_batch(np.asarray(x)[None], np.asarray(xdot)[None], basis, tol)
    return c[0], float(res[0])


@dataclass
class FitResult:
    control: MonomialControl
    delta: float  # sup over samples of |fit - c|
    kappa: float  # max |rho_nz^-(dG+1)|
    delta_prime: float  # delta / kappa
    shifted_residual: float  # sup residual of the fit before un-shifting
    condition: float
    rank: int
    ill_conditioned: bool

    def to_dict(self):
        return {"delta": self.delta, "kappa": self.kappa, "delta_prime": self.delta_prime,
                "shifted_residual": self.shifted_residual, "condition": self.condition,
                "rank": self.rank, "ill_conditioned": self.ill_conditioned,
                "n_monomials": int(len(self.control.exponents))}


def fit_monomials(c_samples, times, p: ParameterizationSet, grid: SigmaGrid, degree_cap: int, dG: int,
                  rcond: float = 1e-10, cond_limit: float = 1e8, ridge: float = 1e-12) -> FitResult:
    """Fit sigma -> c_i(t, sigma) rho_nz(sigma)^-(dG+1) by monomials of degree <= degree_cap.

    c_samples has shape (gamma, K, M). The fitted exponents are shifted by
    dG+1 on the nonzero slot, so every emitted monomial has degree >= dG+1.
    """
    c = np.asarray(c_samples, dtype=float)
    gam, K, M = c.shape
    if M != grid.M:
        raise ValueError("c_samples do not match the grid")
    shift = dG + 1
    rho_nz = p.functions[p.nonzero_index](grid.samples)
    if np.any(rho_nz == 0):
        raise SynthesisError("designated nonzero function vanishes on the grid")
    w = rho_nz ** (-float(shift))
    kappa = float(np.abs(w).max())

    E = monomials_up_to(p.r, degree_cap)
    V = monomial_values(E, p, grid.samples).T  # (M, P)
    U, s, Vt = np.linalg.svd(V, full_matrices=False)
    keep = s > rcond * s[0]
    rank = int(keep.sum())
    cond = float(s[0] / s[keep][-1])
    y = (c * w[None, None, :]).reshape(gam * K, M).T  # (M, gamma*K)
    ill = cond > cond_limit
    if ill:
        lam = ridge * s[0] ** 2
        coef = Vt.T @ ((s / (s ** 2 + lam))[:, None] * (U.T @ y))
    else:
        coef = Vt[keep].T @ ((U[:, keep].T @ y) / s[keep][:, None])
    shifted_residual = float(np.abs(V @ coef - y).max()) if y.size else 0.0

    E_shift = E.copy()
    E_shift[:, p.nonzero_index] += shift
    coeffs = coef.T.reshape(gam, K, len(E)).transpose(0, 2, 1)
    mc = MonomialControl(E_shift, times, coeffs, min_degree=shift)
    delta = fit_residual(mc, p, grid, c)
    return FitResult(mc, delta, kappa, delta / kappa if kappa else 0.0, shifted_residual, cond, rank, ill)


def fit_residual(mc: MonomialControl, p: ParameterizationSet, grid: SigmaGrid, c_samples) -> float:
    """sup over (i, t, sigma) of |sum_p u_{i,p}(t) p(sigma) - c_i(t, sigma)|, recomputed from scratch."""
    mono = monomial_values(mc.exponents, p, grid.samples)
    approx = np.einsum("ipk,pm->ikm", mc.coeffs, mono, optimize=False)
    return float(np.abs(approx - np.asarray(c_samples)).max()) if approx.size else 0.0


# --- connecting trajectory ---------------------------------------------------

def _psi(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def bump(t, tau: float):
    """Smooth s with s(0) = 1, s = 0 for t >= tau, 0 <= s <= 1."""
    x = np.clip(np.asarray(t, dtype=float) / tau, 0.0, 1.0)
    a, b = _psi(1 - x), _psi(x)
    return a / (a + b)


def bump_derivative(t, tau: float):
    x = np.asarray(t, dtype=float) / tau
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    a, b = _psi(1 - xs), _psi(xs)
    da = a / (1 - xs) ** 2  # d/dx psi(1-x) = -psi'(1-x), psi'(y) = psi(y)/y^2
    db = b / xs ** 2
    ds = (-da * (a + b) - a * (db - da)) / (a + b) ** 2
    return np.where(inside, ds / tau, 0.0)


def connect_initial(X0, target: TargetTrajectory, grid: SigmaGrid, tau: float,
                    eps_init: float = math.inf, check_times=None, t_start: float = 0.0,
                    tol: float = 1e-10) -> TargetTrajectory:
    """X~ = X^ + s(t - t_start) (X0 - X^(t_start)); identical to X^ when the offset is zero."""
    X0 = np.asarray(X0, dtype=float)
    S = grid.samples
    offset = X0 - target(t_start, S)
    err = np.linalg.norm(offset.reshape(len(S), -1), axis=1)
    if np.any(err >= eps_init):
        m = int(np.argmax(err))
        raise SynthesisError(f"initial error {err[m]:.3g} at sample {m} exceeds eps_init={eps_init}")
    if not np.any(offset):
        return target
    rows = {tuple(r): k for k, r in enumerate(S.tolist())}

    def off(s):
        return offset[[rows[tuple(r)] for r in s.tolist()]]

    def X(t, s):
        return target(t, s) + bump(t - t_start, tau) * off(s)

    def dX(t, s):
        return target.derivative(t, s) + bump_derivative(t - t_start, tau) * off(s)

    blended = TargetTrajectory(X, target.T, dX, target.name + "+blend", dict(target.params, blend_time=tau))
    ts = np.linspace(t_start, t_start + tau, 101) if check_times is None else check_times
    for t in ts:
        for m, x in enumerate(blended(t, S)):
            if not is_nondegenerate(x, tol):
                raise SynthesisError(f"blended trajectory leaves Q at t={t:.6g}, sample {m}")
    return blended


# --- bound and tracking --------------------------------------------------------

def error_bound(delta: float, basis_norms, state_bound: float, T: float,
                coef_max: float = 0.0, initial_error: float = 0.0) -> float:
    """Groenwall-style a posteriori heuristic, not a proven bound:

        delta * gamma * max|A*_i| * state_bound * T * exp(L T) + initial_error * exp(L T)

    with L = gamma * coef_max * max|A*_i|.
    """
    norms = np.asarray(basis_norms, dtype=float)
    gam = len(norms)
    a = float(norms.max()) if gam else 0.0
    growth = math.exp(gam * coef_max * a * T)
    return delta * gam * a * state_bound * T * growth + initial_error * growth


@dataclass
class TrackConfig:
    degree_cap: int = 8
    dt: float = 1e-3
    T: float = 1.0
    tol: float = 1e-8
    blend_time: float = 0.1
    eps_init: float = math.inf
    jobs: int = 1
    feedback: bool = False
    fd_step: float | None = None  # None: h = dt

    def to_dict(self):
        d = dict(self.__dict__)
        d["eps_init"] = None if math.isinf(self.eps_init) else self.eps_init
        return d


@dataclass
class SegmentSynthesis:
    t_start: float
    t_end: float
    graph: Digraph
    diameter: int
    depth: int
    words: list
    basis: np.ndarray
    fit: FitResult
    coef_max: float
    residual_max: float


@dataclass
class TrackingReport:
    delta: float
    sup_error: float
    error_curves: np.ndarray  # (M, K+1)
    error_bound: float
    parameters: dict
    segments: list
    validation_sup_error: float | None = None
    validation_curves: np.ndarray | None = None

    def to_dict(self):
        return {
            "fit_residual": self.delta,
            "sup_error": self.sup_error,
            "error_bound": self.error_bound,
            "validation_sup_error": self.validation_sup_error,
            "parameters": self.parameters,
            "per_sigma_max_error": self.error_curves.max(axis=1).tolist(),
            "segments": [
                {"t_start": s.t_start, "t_end": s.t_end, "graph": s.graph.to_dict(),
                 "diameter": s.diameter, "depth": s.depth, "words": [str(w.word) for w in s.words],
                 "coef_max": s.coef_max, "solve_residual_max": s.residual_max, "fit": s.fit.to_dict()}
                for s in self.segments
            ],
        }


def check_hypotheses(schedule: GraphSchedule, p: ParameterizationSet, grid: SigmaGrid, N: int, n: int):
    failures = []
    for t, g in schedule.segments:
        if g.n != N:
            failures.append(f"graph at t={t} has {g.n} vertices, target has {N} agents")
        elif not is_strongly_connected(g):
            failures.append(f"graph at t={t} is not strongly connected")
    if not N > n + 1:
        failures.append(f"need N > n+1, got N={N}, n={n}")
    if not p.nonzero_on(grid):
        failures.append(f"parameterization {p.nonzero_index} is not nonzero on every grid sample")
    sep = check_separation(p, grid)
    if not sep.ok:
        failures.append(f"parameterization does not separate sample pairs {sep.unseparated[:5]}")
    if failures:
        raise HypothesisError(failures)


def basis_for(g: Digraph):
    """Bracket-word basis at depth d(G), or d(G)+1 when depth d(G) does not reach gamma elements."""
    d = diameter(g)
    try:
        return d, codist_basis(g, d)
    except LieCheckError:
        return d, codist_basis(g, d + 1)


def _check_target_in_q(X, times, tol):
    for k, t in enumerate(times):
        for m in range(X.shape[1]):
            if not is_nondegenerate(X[k, m], tol):
                raise SynthesisError(f"target leaves Q at t={t:.6g}, sample {m}")


def synthesize_segment(target: TargetTrajectory, g: Digraph, p: ParameterizationSet, grid: SigmaGrid,
                       t_start: float, t_end: float, cfg: TrackConfig, q_tol: float = 1e-10):
    d, words = basis_for(g)
    depth = words[0].word.depth
    basis = np.array([w.matrix for w in words], dtype=float)
    half = cfg.dt / 2
    K = int(round((t_end - t_start) / half))
    times = t_start + np.arange(K + 1) * half
    h = cfg.dt if cfg.fd_step is None else cfg.fd_step
    S = grid.samples
    Xt = np.stack([target(t, S) for t in times])  # (K+1, M, N, n)
    Xd = np.stack([target.derivative(t, S, h) for t in times])
    _check_target_in_q(Xt, times, q_tol)
    Kp, M = Xt.shape[:2]
    c, res = solve_coefficients_batch(Xt.reshape((-1,) + Xt.shape[2:]), Xd.reshape((-1,) + Xd.shape[2:]),
                                      basis, cfg.tol)
    c = c.reshape(Kp, M, -1).transpose(2, 0, 1)  # (gamma, K, M)
    fit = fit_monomials(c, times, p, grid, cfg.degree_cap, depth)
    return SegmentSynthesis(t_start, t_end, g, d, depth, words, basis, fit,
                            float(np.abs(c).max()), float(res.max()))


class FeedbackDynamics:
    """Re-solves the coefficients on the current state at every stage, then fits them."""

    def __init__(self, target, p, grid, seg: SegmentSynthesis, cfg: TrackConfig):
        self.target, self.p, self.grid, self.seg, self.cfg = target, p, grid, seg, cfg

    def restrict(self, idx):
        return FeedbackDynamics(self.target, self.p, self.grid.subset(idx), self.seg, self.cfg)

    def rhs(self, t, X, graph=None, segment: int = 0):
        h = self.cfg.dt if self.cfg.fd_step is None else self.cfg.fd_step
        c, _ = solve_coefficients_batch(X, self.target.derivative(t, self.grid.samples, h), self.seg.basis,
                                        tol=math.inf)
        fit = fit_monomials(c.T[:, None, :], np.array([t]), self.p, self.grid, self.cfg.degree_cap,
                            self.seg.depth)
        dyn = ExtendedDynamics(self.p, self.grid, [(self.seg.basis, fit.control)])
        return dyn.rhs(t, X, graph)


def track(target: TargetTrajectory, schedule: GraphSchedule | Digraph, p: ParameterizationSet,
          grid: SigmaGrid, cfg: TrackConfig | None = None, X0=None,
          validation_grid: SigmaGrid | None = None):
    """Open-loop tracking of ``target`` on every grid sample.

    Each schedule segment gets its own basis and control, synthesized on a
    connecting trajectory that starts from the actual state at the segment's
    start. Returns (times, states (K+1, M, N, n), TrackingReport).
    """
    cfg = cfg or TrackConfig()
    if isinstance(schedule, Digraph):
        schedule = GraphSchedule.static(schedule, cfg.T)
    T = schedule.T
    S = grid.samples
    X_hat0 = target(0.0, S)
    M, N, n = X_hat0.shape
    check_hypotheses(schedule, p, grid, N, n)
    X = X_hat0.copy() if X0 is None else np.asarray(X0, dtype=float)
    initial_error = float(np.linalg.norm((X - X_hat0).reshape(M, -1), axis=1).max())

    Xv = None
    if validation_grid is not None:
        Xv = target(0.0, validation_grid.samples)
        vstates = [Xv[None]]
    segs, states, times = [], [X[None]], [np.array([0.0])]
    for t_a, t_b, g in schedule.intervals():
        tau = min(cfg.blend_time, t_b - t_a)
        tilde = connect_initial(X, target, grid, tau, cfg.eps_init, t_start=t_a,
                                check_times=np.arange(t_a, t_a + tau + cfg.dt / 2, cfg.dt))
        seg = synthesize_segment(tilde, g, p, grid, t_a, t_b, cfg)
        segs.append(seg)
        local = GraphSchedule.static(g, t_b - t_a)
        if cfg.feedback:
            dyn = FeedbackDynamics(tilde, p, grid, seg, cfg)
        else:
            dyn = ExtendedDynamics(p, grid, [(seg.basis, seg.fit.control)])
        traj = integrate(X, dyn, local, cfg.dt, jobs=cfg.jobs, t0=t_a)
        states.append(traj.states[1:])
        times.append(traj.times[1:])
        X = traj.final
        if Xv is not None and not cfg.feedback:
            vdyn = ExtendedDynamics(p, validation_grid, [(seg.basis, seg.fit.control)])
            vtraj = integrate(Xv, vdyn, local, cfg.dt, jobs=cfg.jobs, t0=t_a)
            vstates.append(vtraj.states[1:])
            Xv = vtraj.final

    times = np.concatenate(times)
    states = np.concatenate(states)
    ref = np.stack([target(t, S) for t in times])
    curves = np.linalg.norm((states - ref).reshape(len(times), M, -1), axis=2).T
    sup_error = float(curves.max())

    v_sup = v_curves = None
    if Xv is not None and len(vstates) == len(segs) + 1:
        vst = np.concatenate(vstates)
        vref = np.stack([target(t, validation_grid.samples) for t in times])
        v_curves = np.linalg.norm((vst - vref).reshape(len(times), len(vst[0]), -1), axis=2).T
        v_sup = float(v_curves.max())

    delta = max(s.fit.delta for s in segs)
    norms = np.max([np.linalg.norm(s.basis, ord=2, axis=(1, 2)) for s in segs], axis=0)
    state_bound = float(np.linalg.norm(ref.reshape(len(times), M, -1), axis=2).max())
    coef_max = max(s.coef_max for s in segs) + delta
    bound = error_bound(delta, norms, state_bound, T, coef_max, initial_error)
    params = {"config": cfg.to_dict(), "M": M, "N": N, "n": n, "T": T,
              "n_time_steps": int(len(times) - 1), "state_bound": state_bound, "coef_max": coef_max,
              "initial_error": initial_error,
              "validation_M": None if validation_grid is None else validation_grid.M}
    report = TrackingReport(delta, sup_error, curves, bound, params, segs, v_sup, v_curves)
    return times, states, report
