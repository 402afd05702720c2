"""Sampled ensembles, parameterization functions and fixed-step RK4 integration.

The parameter space is a box discretized to a finite grid of samples; every
sample carries its own N x n configuration and is integrated independently.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .digraph import Digraph, GraphSchedule


class IntegrationError(RuntimeError):
    def __init__(self, msg, t=None, sample=None):
        super().__init__(msg)
        self.t = t
        self.sample = sample


# --- parameterization functions -------------------------------------------

def _coord(sig, params):
    return sig[:, params.get("index", 0)]


_BUILTINS = {
    "constant": lambda s, p: np.full(len(s), float(p.get("value", 1.0))),
    "coordinate": lambda s, p: _coord(s, p).astype(float),
    "affine": lambda s, p: p.get("a", 0.0) + p.get("b", 1.0) * _coord(s, p),
    "polynomial": lambda s, p: np.polynomial.polynomial.polyval(_coord(s, p), p["coeffs"]),
    "exponential": lambda s, p: p.get("a", 1.0) * np.exp(p.get("b", 1.0) * _coord(s, p)),
}


@dataclass(frozen=True)
class Rho:
    """A scalar map on parameter samples, given by a built-in name and params."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _BUILTINS:
            raise ValueError(f"unknown parameterization {self.name!r}; choose from {sorted(_BUILTINS)}")

    def __call__(self, sigmas) -> np.ndarray:
        return np.asarray(_BUILTINS[self.name](_as_samples(sigmas), self.params), dtype=float)

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], dict(d.get("params", {})))


@dataclass(frozen=True)
class ParameterizationSet:
    functions: tuple
    nonzero_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise ValueError("need at least one parameterization function")
        if not 0 <= self.nonzero_index < len(self.functions):
            raise ValueError("nonzero_index out of range")

    @property
    def r(self) -> int:
        return len(self.functions)

    def values(self, sigmas) -> np.ndarray:
        """(M, r) table of rho_s(sigma_m)."""
        return np.stack([f(sigmas) for f in self.functions], axis=1)

    def nonzero_on(self, grid: "SigmaGrid") -> bool:
        return bool(np.all(np.abs(self.functions[self.nonzero_index](grid.samples)) > 0))

    def to_dict(self):
        return {"functions": [f.to_dict() for f in self.functions], "nonzero_index": self.nonzero_index}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Rho.from_dict(f) for f in d["functions"]), d.get("nonzero_index", 0))


def _as_samples(sigmas) -> np.ndarray:
    s = np.asarray(sigmas, dtype=float)
    if s.ndim == 0:
        s = s.reshape(1, 1)
    elif s.ndim == 1:
        s = s[:, None]
    return s


@dataclass(frozen=True)
class SigmaGrid:
    samples: np.ndarray  # (M, d)

    def __post_init__(self):
        s = _as_samples(self.samples)
        if len(s) < 1:
            raise ValueError("grid needs at least one sample")
        if s.shape[1] not in (1, 2):
            raise ValueError("only 1- and 2-dimensional parameter boxes are supported")
        if len(np.unique(s, axis=0)) != len(s):
            raise ValueError("grid samples must be distinct")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def box(cls, lower, upper, counts) -> "SigmaGrid":
        lower, upper, counts = np.atleast_1d(lower), np.atleast_1d(upper), np.atleast_1d(counts)
        axes = [np.linspace(lo, hi, int(c)) for lo, hi, c in zip(lower, upper, counts)]
        return cls(np.array(list(product(*axes)), dtype=float))

    def subset(self, idx) -> "SigmaGrid":
        return SigmaGrid(self.samples[np.asarray(idx)])

    def to_dict(self):
        return {"samples": self.samples.tolist()}


@dataclass
class SeparationReport:
    ok: bool
    witnesses: dict  # (a, b) -> function index
    unseparated: list

    def to_dict(self):
        return {"ok": self.ok, "unseparated": [list(p) for p in self.unseparated],
                "witnesses": [[a, b, s] for (a, b), s in sorted(self.witnesses.items())]}


def check_separation(p: ParameterizationSet, grid: SigmaGrid, tol: float = 1e-12) -> SeparationReport:
    vals = p.values(grid.samples)
    witnesses, missing = {}, []
    for a in range(grid.M):
        for b in range(a + 1, grid.M):
            diff = np.abs(vals[a] - vals[b]) > tol
            if diff.any():
                witnesses[(a, b)] = int(np.argmax(diff))
            else:
                missing.append((a, b))
    return SeparationReport(not missing, witnesses, missing)


def _check_exponents(exponents, p: ParameterizationSet):
    e = np.atleast_2d(np.asarray(exponents, dtype=int))
    if e.shape[1] != p.r:
        raise ValueError(f"exponent vectors need length {p.r}")
    neg = e < 0
    neg[:, p.nonzero_index] = False
    if neg.any():
        raise ValueError("negative exponents are only allowed on the everywhere-nonzero function")
    return e


def monomial_values(exponents, p: ParameterizationSet, sigmas) -> np.ndarray:
    """(P, M) table of prod_s rho_s(sigma_m)^k_s."""
    e = _check_exponents(exponents, p)
    rho = p.values(sigmas)
    out = np.ones((len(e), len(rho)))
    for s in range(p.r):
        out *= rho[None, :, s] ** e[:, s, None].astype(float)
    return out


def eval_monomial(exponents, p: ParameterizationSet, sigma) -> float:
    return float(monomial_values([exponents], p, _as_samples(sigma)[:1])[0, 0])


def monomials_up_to(r: int, k: int, lo: int = 0) -> np.ndarray:
    """Exponent vectors of total degree in [lo, k], graded then lexicographic."""
    out = []
    for deg in range(lo, k + 1):
        for e in product(range(deg, -1, -1), repeat=r):
            if sum(e) == deg:
                out.append(e)
    return np.array(out, dtype=int).reshape(-1, r)


# --- time-sampled controls --------------------------------------------------

def _interp_weights(times: np.ndarray, t: float):
    h = times[1] - times[0] if len(times) > 1 else 1.0
    j = int(np.searchsorted(times, t, side="right")) - 1
    j = min(max(j, 0), len(times) - 1)
    if j == len(times) - 1 or abs(t - times[j]) <= 1e-12 * h:
        return j, j, 0.0
    if abs(times[j + 1] - t) <= 1e-12 * h:
        return j + 1, j + 1, 0.0
    w = (t - times[j]) / (times[j + 1] - times[j])
    return j, j + 1, float(w)


def _interp(times, values, t):
    a, b, w = _interp_weights(times, t)
    if w == 0.0:
        return values[..., a]
    return (1.0 - w) * values[..., a] + w * values[..., b]


@dataclass(frozen=True)
class MonomialControl:
    """u_{i,p}(t) for each basis index i and exponent vector p, linearly interpolated."""

    exponents: np.ndarray  # (P, r)
    times: np.ndarray  # (K,)
    coeffs: np.ndarray  # (gamma, P, K)
    min_degree: int = 0

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.exponents, dtype=int))
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[1:] != (len(e), len(t)):
            raise ValueError(f"coeffs shape {c.shape} does not match (gamma, {len(e)}, {len(t)})")
        if np.any(np.diff(t) <= 0):
            raise ValueError("control times must increase")
        if len(e) and e.sum(axis=1).min() < self.min_degree:
            raise ValueError(f"every monomial needs total degree >= {self.min_degree}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite control values")
        object.__setattr__(self, "exponents", e)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    @property
    def gamma(self) -> int:
        return self.coeffs.shape[0]

    def at(self, t: float) -> np.ndarray:
        return _interp(self.times, self.coeffs, t)

    def coefficients(self, t: float, mono: np.ndarray) -> np.ndarray:
        """(gamma, M) values sum_p u_{i,p}(t) p(sigma_m), given the (P, M) monomial table."""
        return _weighted_sum(self.at(t).T[:, :, None], mono[:, None, :])

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0


@dataclass(frozen=True)
class EdgeControl:
    edges: tuple  # ((i, j), ...), 1-indexed
    times: np.ndarray  # (K,)
    values: np.ndarray  # (E, r, K)

    def __post_init__(self):
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != len(edges) or v.ndim != 3 or v.shape[2] != len(t):
            raise ValueError("values must have shape (edges, r, times)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite control values")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, edges, u) -> "EdgeControl":
        u = np.asarray(u, dtype=float)
        return cls(tuple(edges), np.array([0.0]), u[:, :, None])

    def at(self, t: float) -> np.ndarray:
        return _interp(self.times, self.values, t)


# --- vector fields ----------------------------------------------------------

def vector_field_original(x, g: Digraph, p: ParameterizationSet, sigma, edges, u) -> np.ndarray:
    """sum over edges (i,j) in g and s of u_{ij,s} rho_s(sigma) A_ij x."""
    x = np.asarray(x, dtype=float)
    rho = p.values(_as_samples(sigma))[0]
    out = np.zeros_like(x)
    for (i, j), ue in zip(edges, np.asarray(u, dtype=float)):
        if g.has_edge(i, j):
            out[i - 1] += float(ue @ rho) * (x[j - 1] - x[i - 1])
    return out


def vector_field_extended(x, basis, p: ParameterizationSet, sigma, mc: MonomialControl, t: float):
    """sum_i (sum_p u_{i,p}(t) p(sigma)) A*_i x."""
    mono = monomial_values(mc.exponents, p, _as_samples(sigma)[:1])
    c = mc.coefficients(t, mono)[:, 0]
    return np.einsum("i,iab,bc->ac", c, np.asarray(basis, dtype=float), np.asarray(x, dtype=float),
                     optimize=False)


# --- dynamics: rhs(t, X (M,N,n), segment) -> (M,N,n) ------------------------
# Contractions over the small axes are accumulated in a fixed order so a
# sample's result never depends on how many samples share the batch.

def _weighted_sum(w, terms):
    """sum_k w[k] * terms[k], accumulated sequentially over k."""
    out = w[0] * terms[0]
    for k in range(1, len(w)):
        out = out + w[k] * terms[k]
    return out


def apply_generators(G, X):
    """Batched G_m @ X_m for (M, N, N) and (M, N, n)."""
    return _weighted_sum(np.moveaxis(G, 2, 0)[:, :, :, None], np.moveaxis(X, 1, 0)[:, :, None, :])


class OriginalDynamics:
    def __init__(self, p: ParameterizationSet, grid: SigmaGrid, control: EdgeControl):
        self.p, self.grid, self.control = p, grid, control
        self.rho = p.values(grid.samples)  # (M, r)

    def restrict(self, idx):
        return OriginalDynamics(self.p, self.grid.subset(idx), self.control)

    def rhs(self, t, X, graph: Digraph, segment: int = 0):
        u = self.control.at(t)  # (E, r)
        out = np.zeros_like(X)
        for (i, j), ue in zip(self.control.edges, u):
            if graph.has_edge(i, j):
                w = _weighted_sum(ue, self.rho.T)  # (M,)
                out[:, i - 1] += w[:, None] * (X[:, j - 1] - X[:, i - 1])
        return out


class ExtendedDynamics:
    """Reduced extended system; one (basis, control) pair per schedule segment."""

    def __init__(self, p: ParameterizationSet, grid: SigmaGrid, segments):
        self.p, self.grid = p, grid
        self.segments = [(np.asarray(b, dtype=float), mc) for b, mc in segments]
        self.mono = [monomial_values(mc.exponents, p, grid.samples) for _, mc in self.segments]

    def restrict(self, idx):
        return ExtendedDynamics(self.p, self.grid.subset(idx), self.segments)

    def generators(self, t, segment: int = 0) -> np.ndarray:
        basis, mc = self.segments[segment]
        c = mc.coefficients(t, self.mono[segment])  # (gamma, M)
        return _weighted_sum(c[:, :, None, None], basis[:, None])

    def rhs(self, t, X, graph: Digraph, segment: int = 0):
        return apply_generators(self.generators(t, segment), X)


class MatrixDynamics:
    """Frozen generator per sample: dX/dt = G_m X."""

    def __init__(self, G):
        self.G = np.asarray(G, dtype=float)

    def restrict(self, idx):
        return MatrixDynamics(self.G[np.asarray(idx)])

    def rhs(self, t, X, graph=None, segment: int = 0):
        return apply_generators(self.G, X)


# --- integration ------------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray  # (K+1,)
    states: np.ndarray  # (K+1, M, N, n)
    switch_steps: list

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def write_csv(self, path):
        K, M, N, n = self.states.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sigma_index", "agent", "coordinate", "value"])
            for k in range(K):
                t = repr(float(self.times[k]))
                for m, a, c in product(range(M), range(N), range(n)):
                    w.writerow([t, m, a + 1, c + 1, repr(float(self.states[k, m, a, c]))])

    def to_dict(self):
        return {"times": self.times.tolist(), "states": self.states.tolist(),
                "switch_steps": list(self.switch_steps)}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def time_steps(T: float, dt: float) -> int:
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    steps = int(round(T / dt))
    if steps == 0 or abs(steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"dt={dt} does not divide T={T}")
    return steps


def snapped_switch_steps(schedule: GraphSchedule, dt: float) -> list[int]:
    return [int(round(t / dt)) for t in schedule.switch_times]


def _rk4(X0, dynamics, schedule, dt, steps, switch_steps, offset, t0=0.0):
    graphs = [g for _, g in schedule.segments]
    states = np.empty((steps + 1,) + X0.shape)
    states[0] = X = X0
    # overflow is detected and reported below, so numpy's warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        _rk4_loop(X, states, dynamics, graphs, dt, steps, switch_steps, offset, t0)
    return states


def _rk4_loop(X, states, dynamics, graphs, dt, steps, switch_steps, offset, t0):
    seg = 0
    for k in range(steps):
        while seg + 1 < len(switch_steps) and k >= switch_steps[seg + 1]:
            seg += 1
        g = graphs[seg]
        t = t0 + k * dt
        k1 = dynamics.rhs(t, X, g, seg)
        k2 = dynamics.rhs(t + dt / 2, X + (dt / 2) * k1, g, seg)
        k3 = dynamics.rhs(t + dt / 2, X + (dt / 2) * k2, g, seg)
        k4 = dynamics.rhs(t + dt, X + dt * k3, g, seg)
        X = X + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(X)):
            bad = int(np.argwhere(~np.isfinite(X))[0][0])
            raise IntegrationError(
                f"non-finite state at t={t0 + (k + 1) * dt:.6g}, sample {bad + offset}",
                t=t0 + (k + 1) * dt, sample=bad + offset)
        states[k + 1] = X


def integrate(X0, dynamics, schedule: GraphSchedule, dt: float, T: float | None = None,
              jobs: int = 1, t0: float = 0.0) -> Trajectory:
    """Classical RK4 with fixed step dt for every sample of the ensemble.

    X0 has shape (M, N, n). Switch times are snapped to the step grid and the
    graph is right-continuous. Samples are split into ``jobs`` contiguous
    chunks; no quantity couples samples, so results do not depend on ``jobs``.
    Schedule times are relative to ``t0``, the absolute time passed to rhs.
    """
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim != 3:
        raise ValueError("initial state must have shape (M, N, n)")
    T = schedule.T if T is None else float(T)
    steps = time_steps(T, dt)
    switch = snapped_switch_steps(schedule, dt)
    if any(b <= a for a, b in zip(switch, switch[1:])):
        raise ValueError("two switch times snap to the same step; refine dt")
    M = len(X0)
    jobs = max(1, min(int(jobs), M))
    if jobs == 1:
        states = _rk4(X0, dynamics, schedule, dt, steps, switch, 0, t0)
    else:
        chunks = np.array_split(np.arange(M), jobs)
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(
                lambda idx: _rk4(X0[idx], dynamics.restrict(idx), schedule, dt, steps, switch, int(idx[0]), t0),
                chunks))
        states = np.concatenate(parts, axis=1)
    times = t0 + np.arange(steps + 1) * dt
    return Trajectory(times, states, switch)


def expm_series(A: np.ndarray, tol: float = 1e-17, max_terms: int = 200) -> np.ndarray:
    """exp(A) by scaling and squaring around a truncated Taylor series."""
    A = np.asarray(A, dtype=float)
    norm = np.abs(A).sum(axis=1).max() if A.size else 0.0
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    B = A / 2 ** s
    term = np.eye(len(A))
    out = term.copy()
    for k in range(1, max_terms):
        term = term @ B / k
        out = out + term
        if np.abs(term).max() <= tol * np.abs(out).max():
            break
    for _ in range(s):
        out = out @ out
    return out
