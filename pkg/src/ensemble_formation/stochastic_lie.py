"""Exact computations in the Lie algebra of zero-row-sum matrices.

Matrices are integer numpy arrays (int64). Every quantity here is an
integer combination of primary matrices, so equality and set membership
are exact. Enumeration switches to Python integers (object arrays) if
entries ever approach the int64 range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .digraph import (
    Digraph,
    GraphError,
    complete_graph,
    cycle_through_edge,
    diameter,
    is_strongly_connected,
    shortest_path,
)
from .exact import bareiss_rank, nullspace

DEFAULT_MAX_N = 6
DEFAULT_MAX_DEPTH = 8
DEFAULT_MAX_ELEMENTS = 3_000_000
_INT64_SAFE = 2**58


class EnumerationCapError(RuntimeError):
    pass


class LieCheckError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def gamma(N: int) -> int:
    """Dimension of the zero-trace ideal: N(N-1) - 1."""
    return N * (N - 1) - 1


def primary_matrix(N: int, i: int, j: int) -> np.ndarray:
    """e_i e_j^T - e_i e_i^T (1-indexed)."""
    if i == j:
        raise ValueError("primary matrix needs i != j")
    if not (1 <= i <= N and 1 <= j <= N):
        raise ValueError(f"indices ({i}, {j}) out of range 1..{N}")
    a = np.zeros((N, N), dtype=np.int64)
    a[i - 1, j - 1] = 1
    a[i - 1, i - 1] = -1
    return a


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def row_sums_zero(a) -> bool:
    return not np.any(np.asarray(a).sum(axis=1))


def is_in_ideal(a) -> bool:
    """Zero row sums and zero trace."""
    return row_sums_zero(a) and np.trace(np.asarray(a)) == 0


def _key(m: np.ndarray):
    if m.dtype == object:
        return tuple(int(v) for v in m.ravel())
    return np.ascontiguousarray(m, dtype=np.int64).tobytes()


class MatrixSet:
    """Exactly deduplicated collection of N x N integer matrices.

    Keeps first-insertion order.
    """

    def __init__(self, matrices=(), n: int | None = None, diagnostics: dict | None = None):
        mats = [np.asarray(m) for m in matrices]
        if n is None:
            if not mats:
                raise ValueError("empty MatrixSet needs an explicit dimension")
            n = mats[0].shape[0]
        self.n = int(n)
        self.diagnostics = dict(diagnostics or {})
        self._index: dict = {}
        kept = []
        big = any(m.dtype == object for m in mats)
        for m in mats:
            if m.shape != (self.n, self.n):
                raise ValueError(f"expected {self.n}x{self.n}, got {m.shape}")
            m = m.astype(object) if big else m.astype(np.int64)
            k = _key(m)
            if k not in self._index:
                self._index[k] = len(kept)
                kept.append(m)
        dtype = object if big else np.int64
        self._data = np.array(kept, dtype=dtype).reshape(len(kept), self.n, self.n)

    @classmethod
    def _from_unique(cls, arr: np.ndarray, diagnostics=None) -> "MatrixSet":
        # trusted path for already deduplicated stacks
        s = cls.__new__(cls)
        s.n = arr.shape[1]
        s.diagnostics = dict(diagnostics or {})
        s._data = arr
        s._index = None
        return s

    def _lookup(self) -> dict:
        if self._index is None:
            self._index = {_key(m): a for a, m in enumerate(self._data)}
        return self._index

    @property
    def array(self) -> np.ndarray:
        return self._data

    def __len__(self):
        return len(self._data)

    def __iter__(self):
        return iter(self._data)

    def __getitem__(self, i):
        return self._data[i]

    def __contains__(self, m) -> bool:
        m = np.asarray(m)
        if m.shape != (self.n, self.n):
            return False
        if self._data.dtype == object or m.dtype == object:
            key = tuple(int(v) for v in m.ravel())
            if self._data.dtype != object:
                if max((abs(v) for v in key), default=0) >= 2**63:
                    return False
                key = np.array(key, dtype=np.int64).tobytes()
        else:
            key = _key(m)
        return key in self._lookup()

    def index(self, m) -> int:
        return self._lookup()[_key(np.asarray(m, dtype=self._data.dtype))]

    def negated(self) -> "MatrixSet":
        return MatrixSet(-self._data, n=self.n) if len(self) else MatrixSet((), n=self.n)

    def as_set(self) -> set:
        return set(self._lookup())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixSet):
            return NotImplemented
        return self.n == other.n and len(self) == len(other) and all(m in other for m in self)

    def __repr__(self):
        return f"MatrixSet(n={self.n}, size={len(self)})"

    def to_list(self) -> list:
        return [[[int(v) for v in row] for row in m] for m in self._data]


# ---------------------------------------------------------------------------
# S_G, S*_G
# ---------------------------------------------------------------------------


def s_g(g: Digraph) -> MatrixSet:
    return MatrixSet([primary_matrix(g.n, i, j) for i, j in g.sorted_edges], n=g.n)


@dataclass(frozen=True)
class StarElement:
    """One member of S*_G with the edge (j, k) that produced it.

    ``kind`` is "swap" for A_jk - A_kj and "shift" for A_ik - A_ij.
    """

    matrix: np.ndarray = field(repr=False)
    kind: str
    edge: tuple
    i: int | None = None

    def label(self) -> str:
        j, k = self.edge
        if self.kind == "swap":
            return f"A{j}{k}-A{k}{j}"
        return f"A{self.i}{k}-A{self.i}{j}"


def s_star_elements(g: Digraph) -> list[StarElement]:
    """S*_G in its deterministic order: sorted edges, swap first, then i ascending."""
    if g.n < 3:
        raise ValueError("S*_G needs at least three vertices")
    seen = set()
    out = []
    N = g.n
    for j, k in g.sorted_edges:
        cands = [StarElement(primary_matrix(N, j, k) - primary_matrix(N, k, j), "swap", (j, k))]
        for i in range(1, N + 1):
            if i not in (j, k):
                m = primary_matrix(N, i, k) - primary_matrix(N, i, j)
                cands.append(StarElement(m, "shift", (j, k), i))
        for c in cands:
            key = _key(c.matrix)
            if key not in seen:
                seen.add(key)
                out.append(c)
    return out


def s_star_g(g: Digraph) -> MatrixSet:
    return MatrixSet([e.matrix for e in s_star_elements(g)], n=g.n)


# ---------------------------------------------------------------------------
# iterated commutators
# ---------------------------------------------------------------------------


def bracket_with_primary(i: int, j: int, stack: np.ndarray) -> np.ndarray:
    """[A_ij, B] for every B in a (K, N, N) stack, without a matmul.

    A_ij B only has row i, equal to B_j - B_i; B A_ij moves column i of B
    into column j and subtracts it from column i.
    """
    i0, j0 = i - 1, j - 1
    out = np.zeros_like(stack)
    out[:, i0, :] = stack[:, j0, :] - stack[:, i0, :]
    col = stack[:, :, i0]
    out[:, :, j0] -= col
    out[:, :, i0] += col
    return out


def _unique_rows(flat: np.ndarray):
    """Sorted unique rows and the index of each row's first occurrence."""
    if flat.dtype == object:
        first: dict = {}
        for a, row in enumerate(flat):
            first.setdefault(tuple(int(v) for v in row), a)
        keys = sorted(first)
        idx = np.array([first[k] for k in keys], dtype=np.int64)
        return flat[idx] if len(idx) else flat[:0], idx
    uniq, idx = np.unique(flat, axis=0, return_index=True)
    return uniq, idx


@dataclass
class ADLevel:
    depth: int
    elements: np.ndarray  # (K, N, N), sorted, nonzero
    raw_count: int
    zero_count: int
    # (K, 2): generator index into sorted edges, index into previous level
    parents: np.ndarray | None = None


def _check_caps(g: Digraph, k: int, max_n: int, max_depth: int):
    if g.n > max_n:
        raise EnumerationCapError(f"N={g.n} exceeds the enumeration cap N<={max_n}")
    if k > max_depth:
        raise EnumerationCapError(f"depth {k} exceeds the enumeration cap k<={max_depth}")
    if k < 0:
        raise ValueError("depth must be nonnegative")


def ad_levels(
    g: Digraph,
    k: int,
    *,
    max_n: int = DEFAULT_MAX_N,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> list[ADLevel]:
    """ad^0(S_G), ..., ad^k(S_G) with back-pointers for word recovery."""
    _check_caps(g, k, max_n, max_depth)
    edges = g.sorted_edges
    N = g.n
    level0 = np.array([primary_matrix(N, i, j) for i, j in edges], dtype=np.int64).reshape(-1, N, N)
    levels = [ADLevel(0, level0, len(edges), 0, None)]
    prev = level0
    for depth in range(1, k + 1):
        if prev.dtype != object and len(prev) and np.abs(prev).max() > _INT64_SAFE:
            prev = prev.astype(object)
        uniq = np.zeros((0, N * N), dtype=prev.dtype)
        parents = np.zeros((0, 2), dtype=np.int64)
        zeros = 0
        for gi, (i, j) in enumerate(edges):
            flat = bracket_with_primary(i, j, prev).reshape(len(prev), N * N)
            nonzero = np.flatnonzero(np.any(flat != 0, axis=1))
            zeros += len(prev) - len(nonzero)
            cand = np.concatenate([uniq, flat[nonzero]])
            cand_parents = np.concatenate(
                [parents, np.stack([np.full(len(nonzero), gi), nonzero], axis=1).astype(np.int64)]
            )
            uniq, idx = _unique_rows(cand)
            parents = cand_parents[idx]
            if len(uniq) > max_elements:
                raise EnumerationCapError(
                    f"|ad^{depth}| exceeds {max_elements} elements (N={N}, |E|={len(edges)})"
                )
        prev = uniq.reshape(-1, N, N)
        levels.append(ADLevel(depth, prev, len(edges) * len(levels[-1].elements), zeros, parents))
    return levels


def ad_set(g: Digraph, k: int, **caps) -> MatrixSet:
    """Evaluated Lie products of depth k with all left factors in S_G.

    Zero products are dropped from the set and tallied in ``diagnostics``.
    """
    lev = ad_levels(g, k, **caps)[-1]
    return MatrixSet._from_unique(
        lev.elements, {"depth": k, "raw_products": lev.raw_count, "zero_products": lev.zero_count}
    )


@dataclass
class Containment:
    ok: bool
    missing: list

    def __bool__(self):
        return self.ok


def contains_set(superset: MatrixSet, subset: MatrixSet) -> Containment:
    if len(subset) and subset.n != superset.n:
        raise ValueError("dimension mismatch")
    missing = [m for m in subset if m not in superset]
    return Containment(not missing, missing)


def rank_span(s) -> int:
    """Exact dimension of the span of a collection of matrices."""
    rows = [[int(v) for v in np.asarray(m).ravel()] for m in s]
    return bareiss_rank(rows)


# ---------------------------------------------------------------------------
# bracket words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    i: int
    j: int

    @property
    def depth(self) -> int:
        return 0

    def __str__(self):
        sep = "," if max(self.i, self.j) > 9 else ""
        return f"A{self.i}{sep}{self.j}"


@dataclass(frozen=True)
class Bracket:
    left: "Leaf | Bracket"
    right: "Leaf | Bracket"

    @property
    def depth(self) -> int:
        return self.left.depth + self.right.depth + 1

    def __str__(self):
        return f"[{self.left},{self.right}]"


BracketWord = Leaf | Bracket


def evaluate(word: BracketWord, N: int) -> np.ndarray:
    if isinstance(word, Leaf):
        return primary_matrix(N, word.i, word.j)
    if isinstance(word.left, Leaf):
        return bracket_with_primary(word.left.i, word.left.j, evaluate(word.right, N)[None])[0]
    return commutator(evaluate(word.left, N), evaluate(word.right, N))


def leaves(word: BracketWord) -> list[Leaf]:
    if isinstance(word, Leaf):
        return [word]
    return leaves(word.left) + leaves(word.right)


def negate(word: BracketWord) -> BracketWord:
    """A word of the same depth evaluating to the negative.

    Right-nested words stay right-nested: the sign is pushed down to the
    innermost bracket, whose two leaves are swapped.
    """
    if isinstance(word, Leaf):
        raise ValueError("a single generator cannot be negated by reordering")
    if isinstance(word.left, Leaf) and isinstance(word.right, Bracket):
        return Bracket(word.left, negate(word.right))
    return Bracket(word.right, word.left)


def wrap(word: BracketWord, edge, times: int = 1) -> BracketWord:
    for _ in range(times):
        word = Bracket(Leaf(*edge), word)
    return word


def word_to_json(word: BracketWord):
    if isinstance(word, Leaf):
        return [word.i, word.j]
    return {"bracket": [word_to_json(word.left), word_to_json(word.right)]}


def word_from_json(obj) -> BracketWord:
    if isinstance(obj, dict):
        left, right = obj["bracket"]
        return Bracket(word_from_json(left), word_from_json(right))
    return Leaf(int(obj[0]), int(obj[1]))


def _check_edges(path, g):
    if g is not None:
        for a, b in zip(path, path[1:]):
            if not g.has_edge(a, b):
                raise GraphError(f"({a}, {b}) is not an edge")


def bracket_word_for_path(path, g: Digraph | None = None) -> BracketWord:
    """Word of depth l-1 for A_{i0 il} - A_{i0 i(l-1)} along a path of length l >= 2."""
    path = [int(v) for v in path]
    l = len(path) - 1
    if l < 2:
        raise ValueError("path must have length at least 2")
    if path[0] == path[-1] or len(set(path)) != len(path):
        raise ValueError(f"not a simple open path: {path}")
    _check_edges(path, g)
    word: BracketWord = Bracket(Leaf(path[0], path[1]), Leaf(path[1], path[2]))
    for p in range(3, l + 1):
        word = Bracket(Leaf(path[p - 1], path[p]), negate(word))
    return word


def path_target(path, N: int) -> np.ndarray:
    return primary_matrix(N, path[0], path[-1]) - primary_matrix(N, path[0], path[-2])


def bracket_word_for_cycle(cycle, g: Digraph | None = None) -> BracketWord:
    """Word of depth l+1 for A_{i0 i1} - A_{i1 i0} along a cycle of length l+1 >= 3.

    ``cycle`` is closed: [i0, i1, ..., il, i0].
    """
    cycle = [int(v) for v in cycle]
    if len(cycle) < 4 or cycle[0] != cycle[-1]:
        raise ValueError("cycle must be closed and of length at least 3")
    body = cycle[:-1]
    if len(set(body)) != len(body):
        raise ValueError(f"cycle repeats a vertex: {cycle}")
    _check_edges(cycle, g)
    i0, i1, i2 = body[0], body[1], body[2]
    inner = bracket_word_for_path(body[2:] + [i0, i1])
    return Bracket(Leaf(i0, i1), Bracket(Leaf(i1, i2), inner))


def cycle_target(cycle, N: int) -> np.ndarray:
    return primary_matrix(N, cycle[0], cycle[1]) - primary_matrix(N, cycle[1], cycle[0])


def word_from_levels(levels: list[ADLevel], edges, depth: int, index: int) -> BracketWord:
    if depth == 0:
        return Leaf(*edges[index])
    gi, pi = levels[depth].parents[index]
    return Bracket(Leaf(*edges[gi]), word_from_levels(levels, edges, depth - 1, int(pi)))


def constructive_word(g: Digraph, elem: StarElement) -> BracketWord:
    """Word for an element of S*_G built from shortest paths and cycles."""
    j, k = elem.edge
    if elem.kind == "swap":
        if g.has_edge(k, j):
            return Bracket(Leaf(k, j), Leaf(j, k))
        return bracket_word_for_cycle(cycle_through_edge(g, (j, k)))
    i = elem.i
    if g.has_edge(i, j):
        return Bracket(Leaf(i, j), Leaf(j, k))
    # [A_jk, A_ij - A_{i,p}] = -(A_ik - A_ij) for the last interior vertex p
    inner = bracket_word_for_path(shortest_path(g, i, j))
    return negate(Bracket(Leaf(j, k), inner))


# ---------------------------------------------------------------------------
# semi-codistinguished witnesses
# ---------------------------------------------------------------------------


def _require_sc(g: Digraph):
    if g.n < 3:
        raise ValueError("need at least three vertices")
    if not is_strongly_connected(g):
        raise GraphError("graph is not strongly connected")


def verify_semi_codistinguished(g: Digraph) -> dict:
    """Span check plus a lambda = 1 witness [A_i, A*_j] = A*_k for every A*_k."""
    _require_sc(g)
    elems = s_star_elements(g)
    star = MatrixSet([e.matrix for e in elems], n=g.n)
    rank = rank_span(star)
    witnesses = []
    failures = []
    for e in elems:
        found = None
        if np.array_equal(bracket_with_primary(*e.edge, e.matrix[None])[0], e.matrix):
            found = (e.edge, e, "closed-form")
        else:
            for a, b in g.sorted_edges:
                hits = [
                    o for o in elems
                    if np.array_equal(bracket_with_primary(a, b, o.matrix[None])[0], e.matrix)
                ]
                if hits:
                    found = ((a, b), hits[0], "search")
                    break
        if found is None:
            failures.append(e.label())
        else:
            edge, partner, how = found
            witnesses.append(
                {"target": e.label(), "generator": list(edge), "partner": partner.label(),
                 "lambda": 1, "method": how}
            )
    report = {
        "n": g.n,
        "rank": rank,
        "gamma": gamma(g.n),
        "spans": rank == gamma(g.n),
        "size": len(elems),
        "witnesses": witnesses,
        "unwitnessed": failures,
    }
    report["ok"] = report["spans"] and not failures
    if not report["ok"]:
        raise LieCheckError("S*_G is not semi-codistinguished to S_G", report)
    return report


# ---------------------------------------------------------------------------
# depth-m words for a basis of the ideal
# ---------------------------------------------------------------------------


@dataclass
class BasisWord:
    word: BracketWord
    matrix: np.ndarray
    element: StarElement | None  # None for completion elements outside S*_G
    natural_depth: int
    method: str  # "constructive", "enumeration" or "completion"

    def label(self) -> str:
        return self.element.label() if self.element is not None else str(self.word)


def codist_basis(g: Digraph, m: int, **caps) -> list[BasisWord]:
    """gamma bracket words of depth exactly m whose values form a basis from S*_G.

    Each element's constructive word is raised to depth m by wrapping it in
    its own edge generator, which leaves the value unchanged. An element
    whose constructive word is deeper than m is looked up in the depth-m
    enumeration instead; elements not reachable at depth m are skipped and
    the next independent element of S*_G is used.

    S*_G does not span the ideal for every strongly connected graph (the
    bidirected star on three vertices gives rank 4 of 5). Any shortfall is
    filled with independent elements of ad^m(S_G) in their sorted order.
    """
    _require_sc(g)
    d = diameter(g)
    if m < d:
        raise ValueError(f"depth m={m} is below the diameter {d}")
    N = g.n
    target = gamma(N)
    levels = None
    chosen: list[BasisWord] = []
    rows: list[list[int]] = []
    for e in s_star_elements(g):
        if len(chosen) == target:
            break
        trial = rows + [[int(v) for v in e.matrix.ravel()]]
        if bareiss_rank(trial) <= len(rows):
            continue
        w = constructive_word(g, e)
        method = "constructive"
        natural = w.depth
        if natural <= m:
            w = wrap(w, e.edge, m - natural)
        else:
            if levels is None:
                levels = ad_levels(g, m, **caps)
            top = MatrixSet._from_unique(levels[m].elements)
            if e.matrix not in top:
                continue
            w = word_from_levels(levels, g.sorted_edges, m, top.index(e.matrix))
            method = "enumeration"
        value = evaluate(w, N)
        if not np.array_equal(value, e.matrix) or w.depth != m:
            raise LieCheckError(f"word {w} does not evaluate to {e.label()}")
        chosen.append(BasisWord(w, e.matrix, e, natural, method))
        rows = trial
    if len(chosen) < target:
        if levels is None:
            levels = ad_levels(g, m, **caps)
        for idx, mat in enumerate(levels[m].elements):
            if len(chosen) == target:
                break
            trial = rows + [[int(v) for v in mat.ravel()]]
            if bareiss_rank(trial) <= len(rows):
                continue
            w = word_from_levels(levels, g.sorted_edges, m, idx)
            chosen.append(BasisWord(w, np.array(mat), None, m, "completion"))
            rows = trial
    if len(chosen) < target:
        raise LieCheckError(f"only {len(chosen)} of {target} basis elements reachable at depth {m}")
    return chosen


def astar_basis(N: int) -> np.ndarray:
    """A fixed integer basis of the zero-trace ideal, drawn from S* of K_N."""
    elems = [e.matrix for e in s_star_elements(complete_graph(N))]
    rows: list[list[int]] = []
    basis = []
    for m in elems:
        trial = rows + [[int(v) for v in m.ravel()]]
        if bareiss_rank(trial) > len(rows):
            rows = trial
            basis.append(m)
        if len(basis) == gamma(N):
            break
    return np.array(basis)


# ---------------------------------------------------------------------------
# Levi decomposition
# ---------------------------------------------------------------------------


def _constraint_rows(N: int, rows=True, cols=False, trace=False):
    out = []
    if rows:
        for r in range(N):
            v = [0] * (N * N)
            for c in range(N):
                v[r * N + c] = 1
            out.append(v)
    if cols:
        for c in range(N):
            v = [0] * (N * N)
            for r in range(N):
                v[r * N + c] = 1
            out.append(v)
    if trace:
        v = [0] * (N * N)
        for r in range(N):
            v[r * N + r] = 1
        out.append(v)
    return out


def _frac_matrix(vec, N):
    return np.array(vec, dtype=object).reshape(N, N)


def _satisfies(m, constraints) -> bool:
    flat = list(np.asarray(m, dtype=object).ravel())
    return all(sum(c * x for c, x in zip(row, flat)) == 0 for row in constraints)


def _is_radical_element(m) -> bool:
    # 1 v^T with v^T 1 = 0: identical rows summing to zero
    m = np.asarray(m, dtype=object)
    return all(list(m[r]) == list(m[0]) for r in range(len(m))) and sum(m[0]) == 0


def levi_check(N: int) -> dict:
    """Exact checks of the ideal's structure: perfectness and its Levi split."""
    if N < 3:
        raise ValueError("Levi checks need N >= 3")
    n2 = N * N
    c_a = _constraint_rows(N)
    c_star = _constraint_rows(N, trace=True)
    c_l = _constraint_rows(N, cols=True, trace=True)

    a_basis = [_frac_matrix(v, N) for v in nullspace(c_a, n2)]
    star_basis = [_frac_matrix(v, N) for v in nullspace(c_star, n2)]
    l_basis = [_frac_matrix(v, N) for v in nullspace(c_l, n2)]
    r_basis = []
    for k in range(N - 1):
        v = [Fraction(0)] * N
        v[k], v[N - 1] = Fraction(1), Fraction(-1)
        r_basis.append(np.array([v] * N, dtype=object))

    dim_a, dim_star, dim_l = len(a_basis), len(star_basis), len(l_basis)
    dim_r = bareiss_rank([list(m.ravel()) for m in r_basis])

    def brackets(xs, ys):
        return [x.dot(y) - y.dot(x) for x in xs for y in ys]

    def rank_of(ms):
        return bareiss_rank([list(np.asarray(m, dtype=object).ravel()) for m in ms])

    aa = brackets(a_basis, a_basis)
    ss = brackets(star_basis, star_basis)
    ll = brackets(l_basis, l_basis)
    rr = brackets(r_basis, r_basis)
    lr = brackets(l_basis, r_basis)

    ones = np.ones(N, dtype=object)
    Z = np.array(
        [[Fraction(int(r == c)) - Fraction(1, N) for c in range(N)] for r in range(N)], dtype=object
    )

    checks = {
        "commutator_ideal": all(_satisfies(m, c_star) for m in aa) and rank_of(aa) == dim_star,
        "perfect": all(_satisfies(m, c_star) for m in ss) and rank_of(ss) == dim_star,
        "levi_dim": dim_l == (N - 1) ** 2 - 1,
        "levi_closed": all(_satisfies(m, c_l) for m in ll),
        "radical_dim": dim_r == N - 1 and all(_satisfies(m, c_star) for m in r_basis),
        "radical_abelian": all(not any(v != 0 for v in m.ravel()) for m in rr),
        "radical_ideal": all(_is_radical_element(m) for m in lr),
        "direct_sum": dim_l + dim_r == dim_star and rank_of(l_basis + r_basis) == dim_star,
        "complement_Z": (
            all(v == 0 for v in Z.dot(ones))
            and np.trace(Z) != 0
            and rank_of(star_basis + [Z]) == dim_a == N * (N - 1)
        ),
    }
    report = {
        "n": N,
        "dims": {"A": dim_a, "A*": dim_star, "A*_l": dim_l, "A*_r": dim_r},
        "checks": checks,
        "ok": all(checks.values()) and dim_star == gamma(N),
    }
    if not report["ok"]:
        raise LieCheckError("Levi structure check failed", report)
    return report
