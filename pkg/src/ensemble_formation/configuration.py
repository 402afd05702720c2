"""Agent configurations, nondegeneracy and the span of {A X : A in the ideal}."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import qr

from .stochastic_lie import primary_matrix

DEFAULT_TOL = 1e-10


class DegenerateConfigurationError(ValueError):
    pass


def numerical_rank(M: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    """Rank with a threshold relative to the largest singular value."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def as_configuration(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"configuration must be N x n, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("configuration has non-finite entries")
    return x


def is_nondegenerate(x, tol: float = DEFAULT_TOL) -> bool:
    """True when the differences x_j - x_1 span R^n."""
    x = as_configuration(x)
    if x.shape[0] < 2:
        raise ValueError("need at least two agents")
    return numerical_rank(x[1:] - x[0], tol) == x.shape[1]


def simplex_subset(x, tol: float = DEFAULT_TOL) -> list[int]:
    """n+1 agents forming an n-simplex, chosen greedily by smallest index (0-based)."""
    x = as_configuration(x)
    n = x.shape[1]
    if not is_nondegenerate(x, tol):
        raise DegenerateConfigurationError("configuration is degenerate")
    chosen = [0]
    for a in range(1, x.shape[0]):
        trial = chosen + [a]
        if numerical_rank(x[trial[1:]] - x[trial[0]], tol) == len(trial) - 1:
            chosen = trial
        if len(chosen) == n + 1:
            break
    return chosen


@dataclass
class SpanReport:
    rank: int
    singular_values: list
    basis_indices: list

    def to_dict(self) -> dict:
        return {"rank": self.rank, "singular_values": self.singular_values,
                "basis_indices": self.basis_indices}


def image_matrix(x, basis) -> np.ndarray:
    """Columns are vec(A_i X), row-major flattening."""
    x = as_configuration(x)
    basis = np.asarray(basis, dtype=float)
    return np.einsum("kab,bc->kac", basis, x).reshape(len(basis), -1).T


def span_rank_Lstar(x, basis, tol: float = DEFAULT_TOL) -> SpanReport:
    B = image_matrix(x, basis)
    s = np.linalg.svd(B, compute_uv=False)
    rank = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > tol * s[0]))
    if rank:
        _, _, piv = qr(B, pivoting=True, mode="economic")
        indices = sorted(int(p) for p in piv[:rank])
    else:
        indices = []
    return SpanReport(rank, [float(v) for v in s], indices)


def constructive_basis(x, tol: float = DEFAULT_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
    """N*n zero-trace matrices A* whose images A* X are linearly independent.

    One agent ``out`` is set aside so the remaining N-1 stay nondegenerate.
    The first n(N-1) pairs are (A_ij - A_out,k) with i, j, k among the rest,
    chosen per agent i so the differences x_j - x_i span R^n; the
    last n are (A_out,s_n - A_out,s_k) over a simplex s_0..s_n of the rest,
    whose images vanish outside row ``out``.
    """
    x = as_configuration(x)
    N, n = x.shape
    if N <= n + 1:
        raise DegenerateConfigurationError(f"need N > n+1, got N={N}, n={n}")
    if not is_nondegenerate(x, tol):
        raise DegenerateConfigurationError("configuration is degenerate")
    # lexicographically first nondegenerate (N-1)-subset
    rest = next(
        (list(c) for c in combinations(range(N), N - 1) if is_nondegenerate(x[list(c)], tol)),
        None,
    )
    if rest is None:
        raise DegenerateConfigurationError("no nondegenerate (N-1)-agent subset")
    out = next(a for a in range(N) if a not in rest)
    k0 = rest[0]

    # the restricted images are block diagonal by row i, so pick n partners j
    # per agent; pivoted QR keeps the choice well conditioned
    result = []
    for i in rest:
        partners = [j for j in rest if j != i]
        diffs = np.array([x[j] - x[i] for j in partners]).T
        _, _, piv = qr(diffs, pivoting=True, mode="economic")
        for p in sorted(piv[:n]):
            j = partners[p]
            A = primary_matrix(N, i + 1, j + 1) - primary_matrix(N, out + 1, k0 + 1)
            result.append((A, A @ x))

    simplex = [rest[a] for a in simplex_subset(x[rest], tol)]
    apex = simplex[-1]
    for k in simplex[:-1]:
        A = primary_matrix(N, out + 1, apex + 1) - primary_matrix(N, out + 1, k + 1)
        result.append((A, A @ x))

    images = np.array([Y.ravel() for _, Y in result])
    if numerical_rank(images, tol) != N * n:
        raise DegenerateConfigurationError("constructed images are not independent at this tolerance")
    return result


def to_json(x) -> dict:
    x = as_configuration(x)
    return {"n_agents": x.shape[0], "dim": x.shape[1], "positions": x.tolist()}


def from_json(d: dict) -> np.ndarray:
    x = as_configuration(d["positions"])
    if x.shape != (d["n_agents"], d["dim"]):
        raise ValueError("positions do not match n_agents x dim")
    return x
