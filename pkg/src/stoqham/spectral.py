"""Sparse operator algebra and spectral checks shared by every construction."""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

STOQ_SLACK = 1e-12
DENSE_LIMIT = 10_000


class NonConvergence(RuntimeError):
    pass


@dataclass
class SparseOperator:
    """Real symmetric operator over an explicit product basis.

    ``site_dims`` describes the basis: site 0 is the most significant digit.
    """

    matrix: sp.csr_matrix
    site_dims: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=float)
        self.matrix.sum_duplicates()
        self.matrix.eliminate_zeros()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_triples(cls, dim, rows, cols, vals, site_dims=(), name="") -> "SparseOperator":
        m = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=(dim, dim))
        return cls(m.tocsr(), tuple(site_dims), name)

    @classmethod
    def zeros(cls, dim, site_dims=(), name="") -> "SparseOperator":
        return cls(sp.csr_matrix((dim, dim)), tuple(site_dims), name)

    def triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def is_symmetric(self, tol: float = 0.0) -> bool:
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or np.abs(diff.data).max() <= tol

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, v: np.ndarray) -> float:
        return float(v @ (self.matrix @ v))

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.matrix + other.matrix, self.site_dims, "")

    def scaled(self, w: float) -> "SparseOperator":
        return SparseOperator(self.matrix * w, self.site_dims, self.name)


def weighted_sum(terms: Mapping[str, SparseOperator], weights: Mapping[str, float] | None = None) -> SparseOperator:
    weights = weights or {}
    items = list(terms.items())
    total = items[0][1].matrix * weights.get(items[0][0], 1.0)
    for name, op in items[1:]:
        total = total + op.matrix * weights.get(name, 1.0)
    return SparseOperator(total, items[0][1].site_dims, "sum")


# -- local terms ---------------------------------------------------------


def strides(site_dims: Sequence[int]) -> np.ndarray:
    s = np.ones(len(site_dims), dtype=np.int64)
    for i in range(len(site_dims) - 2, -1, -1):
        s[i] = s[i + 1] * site_dims[i + 1]
    return s


def embed_local(site_dims: Sequence[int], sites: Sequence[int], rows, cols, vals) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Triples of ``M_sites (x) 1_rest`` for a local matrix given by triples.

    Local indices are big-endian over ``sites`` in the order given.
    """
    site_dims = list(site_dims)
    st = strides(site_dims)
    rest = [i for i in range(len(site_dims)) if i not in set(sites)]
    base = np.zeros(1, dtype=np.int64)
    for i in rest:
        base = (base[:, None] + np.arange(site_dims[i], dtype=np.int64)[None, :] * st[i]).ravel()
    local_dims = [site_dims[s] for s in sites]
    lst = strides(local_dims)

    def to_global(local):
        local = np.asarray(local, dtype=np.int64)
        g = np.zeros_like(local)
        for k, s in enumerate(sites):
            g += ((local // lst[k]) % local_dims[k]) * st[s]
        return g

    gr, gc = to_global(rows), to_global(cols)
    vals = np.asarray(vals, float)
    R = (base[:, None] + gr[None, :]).ravel()
    C = (base[:, None] + gc[None, :]).ravel()
    V = np.broadcast_to(vals[None, :], (len(base), len(vals))).ravel()
    return R, C, V


def assemble(site_dims: Sequence[int], local_terms: Iterable[tuple[Sequence[int], object, object, object]], name="") -> SparseOperator:
    """Sum of embedded local terms, each ``(sites, rows, cols, vals)``."""
    dim = int(np.prod(site_dims, dtype=np.int64))
    Rs, Cs, Vs = [], [], []
    for sites, r, c, v in local_terms:
        if len(v) == 0:
            continue
        R, C, V = embed_local(site_dims, sites, r, c, v)
        Rs.append(R)
        Cs.append(C)
        Vs.append(V)
    if not Rs:
        return SparseOperator.zeros(dim, site_dims, name)
    return SparseOperator.from_triples(dim, np.concatenate(Rs), np.concatenate(Cs), np.concatenate(Vs), site_dims, name)


# -- stoquasticity -------------------------------------------------------


@dataclass
class TermVerdict:
    name: str
    passed: bool
    worst_value: float
    worst_location: tuple[int, int] | None


@dataclass
class StoqReport:
    verdicts: list[TermVerdict]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def worst(self) -> TermVerdict | None:
        bad = [v for v in self.verdicts if v.worst_location is not None]
        return max(bad, key=lambda v: v.worst_value) if bad else None


def check_stoquastic(terms, tol: float = STOQ_SLACK) -> StoqReport:
    """Scan stored off-diagonal entries of each term; pass iff all are <= tol."""
    if isinstance(terms, Mapping):
        items = list(terms.items())
    else:
        items = [(getattr(t, "name", "") or f"term{i}", t) for i, t in enumerate(terms)]
    verdicts = []
    for name, op in items:
        m = op.matrix if isinstance(op, SparseOperator) else sp.csr_matrix(op)
        coo = m.tocoo()
        off = coo.row != coo.col
        if not off.any():
            verdicts.append(TermVerdict(name, True, float("-inf"), None))
            continue
        data = coo.data[off]
        k = int(np.argmax(data))
        worst = float(data[k])
        loc = (int(coo.row[off][k]), int(coo.col[off][k]))
        verdicts.append(TermVerdict(name, worst <= tol, worst, loc))
    return StoqReport(verdicts)


# -- eigenvalues ---------------------------------------------------------


@dataclass
class SpectrumResult:
    lam_min: float
    lam_second: float | None
    residual: float
    method: str
    vector: np.ndarray | None = field(default=None, repr=False)


def _norm_estimate(m) -> float:
    if sp.issparse(m):
        return float(abs(m).sum(axis=1).max()) if m.nnz else 0.0
    return float(np.abs(m).sum(axis=1).max()) if m.size else 0.0


def min_eigenvalue(H, mode: str = "auto", k: int = 2, tol: float = 1e-8, maxiter: int | None = None) -> SpectrumResult:
    """Smallest (and second smallest) eigenvalue of a symmetric operator.

    ``dense`` uses LAPACK; ``iterative`` uses implicitly restarted Lanczos
    from the normalized all-ones start vector; ``components`` splits the
    operator into the connected components of its off-diagonal graph first.
    """
    m = H.matrix if isinstance(H, SparseOperator) else H
    n = m.shape[0]
    if mode == "auto":
        mode = "dense" if n <= DENSE_LIMIT else "iterative"
    if mode == "components":
        return _min_by_components(m, tol)
    if mode == "dense":
        a = m.toarray() if sp.issparse(m) else np.asarray(m, float)
        w, v = scipy.linalg.eigh(a)
        vec = v[:, 0]
        res = float(np.linalg.norm(a @ vec - w[0] * vec))
        return SpectrumResult(float(w[0]), float(w[1]) if n > 1 else None, res, "dense", vec)
    if mode == "iterative":
        return _iterative(m, k, tol, maxiter)
    raise ValueError(f"unknown mode {mode!r}")


def start_vector(n: int, seed: int = 0) -> np.ndarray:
    """Normalized all-ones vector with a small fixed perturbation.

    The bare all-ones vector is invariant under the sector symmetries of
    these operators, and restarted Lanczos from it was seen to settle on
    the wrong extremal eigenvalue; the seeded perturbation keeps runs
    reproducible while breaking the symmetry.
    """
    v = np.ones(n) + 1e-2 * np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


SMALL_DENSE = 32
DEFAULT_RESTARTS = 2000


def _iterative(m, k, tol, maxiter) -> SpectrumResult:
    n = m.shape[0]
    m = sp.csr_matrix(m)
    if n <= SMALL_DENSE:
        # too small for a useful Krylov space; ARPACK needs ncv < n
        return min_eigenvalue(m, "dense")
    v0 = start_vector(n)
    norm = max(_norm_estimate(m), 1e-300)
    threads = os.environ.get("STOQHAM_THREADS")
    if threads:
        log.debug("STOQHAM_THREADS=%s", threads)
    ncv = min(n - 1, max(2 * k + 1, 64))
    while True:
        try:
            w, v = spla.eigsh(m, k=k, which="SA", v0=v0, ncv=ncv, tol=0, maxiter=maxiter or DEFAULT_RESTARTS)
            break
        except spla.ArpackNoConvergence as e:
            # clustered eigenvalues: widen the Krylov space and retry
            if ncv >= n - 1 or maxiter is not None:
                raise NonConvergence(f"Lanczos did not converge: {len(e.eigenvalues)} of {k} eigenpairs") from e
            ncv = min(n - 1, 2 * ncv)
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    vec = v[:, 0]
    res = float(np.linalg.norm(m @ vec - w[0] * vec))
    if res > tol * norm:
        raise NonConvergence(f"residual {res:.3e} exceeds {tol:g} * |H|")
    return SpectrumResult(float(w[0]), float(w[1]) if k > 1 else None, res, "iterative", vec)


def components(m) -> tuple[int, np.ndarray]:
    """Connected components of the graph of nonzero off-diagonal entries."""
    m = sp.csr_matrix(m)
    return csgraph.connected_components(m, directed=False)


BATCH_LIMIT = 256
BATCH_ENTRIES = 20_000_000


def _min_by_components(m, tol) -> SpectrumResult:
    """Lowest two eigenvalues, component by component.

    Components of equal size up to BATCH_LIMIT are stacked and solved with
    one batched dense eigvalsh; larger ones go one at a time.
    """
    m = sp.csr_matrix(m)
    n = m.shape[0]
    ncomp, labels = components(m)
    sizes = np.bincount(labels, minlength=ncomp)
    # order states by (component size, component) so equal sizes are contiguous
    comp_order = np.lexsort((np.arange(ncomp), sizes))
    rank = np.empty(ncomp, dtype=np.int64)
    rank[comp_order] = np.arange(ncomp)
    perm = np.argsort(rank[labels], kind="stable")
    pm = sp.csr_matrix(m[perm][:, perm])
    state_sizes = sizes[labels][perm]
    vals: list[np.ndarray] = []
    worst_res = 0.0
    start = 0
    while start < n:
        s = int(state_sizes[start])
        if s > BATCH_LIMIT:
            r = min_eigenvalue(pm[start : start + s][:, start : start + s], "dense" if s <= DENSE_LIMIT else "iterative", tol=tol)
            worst_res = max(worst_res, r.residual)
            vals.append(np.array([r.lam_min] + ([r.lam_second] if r.lam_second is not None else [])))
            start += s
            continue
        stop = start + int(np.searchsorted(state_sizes[start:], s, side="right"))
        step = max(1, BATCH_ENTRIES // (s * s)) * s
        for lo in range(start, stop, step):
            hi = min(stop, lo + step)
            sub = pm[lo:hi].tocoo()
            r_, c_ = sub.row, sub.col - lo
            blk = np.zeros(((hi - lo) // s, s, s))
            np.add.at(blk, (r_ // s, r_ % s, c_ - (r_ // s) * s), sub.data)
            ev = np.linalg.eigvalsh(blk)
            vals.append(np.sort(ev[:, :2].ravel())[:2])
        start = stop
    allv = np.sort(np.concatenate(vals))
    return SpectrumResult(float(allv[0]), float(allv[1]) if n > 1 else None, worst_res, "components")


# -- restriction ---------------------------------------------------------


@dataclass
class Restriction:
    basis: np.ndarray  # global indices of the subspace, sorted
    ops: dict[str, sp.csr_matrix]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def lift(self, v: np.ndarray, full_dim: int) -> np.ndarray:
        out = np.zeros(full_dim)
        out[self.basis] = v
        return out


def reachable(mats: Sequence, seeds: Iterable[int]) -> np.ndarray:
    """Breadth-first closure of seed basis states under nonzero off-diagonals."""
    adj = None
    for m in mats:
        a = sp.csr_matrix(m)
        a = sp.csr_matrix((np.ones_like(a.data), a.indices, a.indptr), shape=a.shape)
        adj = a if adj is None else adj + a
    seen = set(int(s) for s in seeds)
    queue = deque(seen)
    indptr, indices = adj.indptr, adj.indices
    while queue:
        i = queue.popleft()
        for j in indices[indptr[i] : indptr[i + 1]]:
            j = int(j)
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return np.array(sorted(seen), dtype=np.int64)


def restrict(ops: Mapping[str, SparseOperator], basis: np.ndarray) -> Restriction:
    out = {}
    for name, op in ops.items():
        m = op.matrix
        out[name] = sp.csr_matrix(m[basis][:, basis])
    return Restriction(basis, out)


def restrict_to_reachable(ops: Mapping[str, SparseOperator], seeds: Iterable[int], via: Sequence[str] | None = None) -> Restriction:
    """Project named operators onto the closure of ``seeds``.

    The closure follows off-diagonal entries of the operators named in
    ``via`` (all of them by default), so the subspace is invariant under
    each of those operators.
    """
    via = list(ops) if via is None else list(via)
    basis = reachable([ops[k].matrix for k in via], seeds)
    return restrict(ops, basis)


def is_invariant(m, basis: np.ndarray) -> bool:
    """True if no nonzero entry couples ``basis`` to its complement."""
    m = sp.csc_matrix(m)[:, basis]
    mask = np.ones(m.shape[0], dtype=bool)
    mask[basis] = False
    return m[mask].nnz == 0


# -- geometric bound -----------------------------------------------------


@dataclass
class GeometricBound:
    lam: float
    sin2_half: float
    bound: float
    lam_min_sum: float
    cos_theta: float


def null_space(a: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Orthonormal null-space basis and the smallest nonzero eigenvalue."""
    w, v = scipy.linalg.eigh(a)
    zero = w <= tol
    nonzero = w[~zero]
    return v[:, zero], float(nonzero.min()) if nonzero.size else np.inf


def geometric_bound(A1, A2, tol: float = 1e-9) -> GeometricBound:
    """Lower bound ``lam * sin^2(theta/2)`` on the smallest eigenvalue of A1 + A2.

    ``theta`` is the angle between the null spaces, ``lam`` the smaller of
    the two smallest nonzero eigenvalues.  Dense; meant for restricted
    subspaces.
    """
    a1 = A1.toarray() if sp.issparse(A1) else np.asarray(A1, float)
    a2 = A2.toarray() if sp.issparse(A2) else np.asarray(A2, float)
    n1, g1 = null_space(a1, tol)
    n2, g2 = null_space(a2, tol)
    lam = min(g1, g2)
    if n1.shape[1] == 0 or n2.shape[1] == 0:
        cos = 0.0
    else:
        cos = float(np.clip(np.linalg.svd(n1.T @ n2, compute_uv=False).max(), 0.0, 1.0))
    theta = float(np.arccos(cos))
    sin2_half = float(np.sin(theta / 2) ** 2)
    bound = 0.0 if not np.isfinite(lam) else lam * sin2_half
    lam_sum = float(scipy.linalg.eigvalsh(a1 + a2)[0])
    if lam_sum < bound - 1e-9:
        raise AssertionError(f"geometric bound violated: {lam_sum} < {bound}")
    return GeometricBound(float(lam), sin2_half, float(bound), lam_sum, cos)


# -- Matrix Market -------------------------------------------------------


def write_matrix_market(path, op: SparseOperator) -> None:
    """Symmetric coordinate format, lower triangle, 1-indexed."""
    m = sp.tril(op.matrix).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if op.name:
            fh.write(f"% {op.name}\n")
        if op.site_dims:
            fh.write("% site_dims " + " ".join(map(str, op.site_dims)) + "\n")
        fh.write(f"{op.dim} {op.dim} {m.nnz}\n")
        order = np.lexsort((m.row, m.col))
        for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


def read_matrix_market(path) -> SparseOperator:
    m = scipy.io.mmread(path)
    site_dims: tuple[int, ...] = ()
    name = ""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("%"):
                break
            if line.startswith("% site_dims"):
                site_dims = tuple(int(x) for x in line.split()[2:])
            elif line.startswith("% ") and not line.startswith("%%"):
                name = line[2:].strip()
    return SparseOperator(sp.csr_matrix(m), site_dims, name)


# -- local Hamiltonians --------------------------------------------------


@dataclass
class LocalTerm:
    """A matrix on a few sites, stored as local triples (big-endian over ``sites``)."""

    sites: tuple[int, ...]
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    label: str = ""


@dataclass
class LocalHamiltonian:
    """Sum of local terms on a product space, kept symbolic until needed."""

    site_dims: tuple[int, ...]
    terms: list[LocalTerm]
    name: str = ""

    @property
    def dim(self) -> int:
        return int(np.prod(self.site_dims, dtype=np.int64))

    @property
    def locality(self) -> int:
        return max((len(t.sites) for t in self.terms), default=0)

    def full(self, cap: int = 10**7) -> SparseOperator:
        if self.dim > cap:
            raise MemoryError(f"full space has {self.dim} states, cap is {cap}")
        diag_terms = [t for t in self.terms if np.array_equal(t.rows, t.cols)]
        other = [(t.sites, t.rows, t.cols, t.vals) for t in self.terms if not np.array_equal(t.rows, t.cols)]
        op = assemble(self.site_dims, other, self.name)
        if diag_terms:
            # diagonal terms are evaluated by table lookup instead of embedding
            idx = np.arange(self.dim, dtype=np.int64)
            diag = np.zeros(self.dim)
            for t in diag_terms:
                _, local_of, ld = self._offsets(t)
                table = np.bincount(np.asarray(t.rows, dtype=np.int64), weights=t.vals, minlength=ld)
                diag += table[local_of(idx)]
            op = SparseOperator(op.matrix + sp.diags(diag, format="csr"), op.site_dims, self.name)
        return op

    def _offsets(self, term: LocalTerm):
        st = strides(self.site_dims)
        ld = [self.site_dims[s] for s in term.sites]
        lst = strides(ld)

        def to_global(local):
            local = np.asarray(local, dtype=np.int64)
            g = np.zeros_like(local)
            for k, s in enumerate(term.sites):
                g += ((local // lst[k]) % ld[k]) * st[s]
            return g

        def local_of(g):
            g = np.asarray(g, dtype=np.int64)
            out = np.zeros_like(g)
            for k, s in enumerate(term.sites):
                out += ((g // st[s]) % self.site_dims[s]) * lst[k]
            return out

        return to_global, local_of, int(np.prod(ld))

    def _columns(self, states: np.ndarray):
        """Yield (source positions, target global indices, values) for every term."""
        for term in self.terms:
            to_global, local_of, ld = self._offsets(term)
            m = sp.csc_matrix((term.vals, (term.rows, term.cols)), shape=(ld, ld))
            m.sum_duplicates()
            li = local_of(states)
            counts = m.indptr[li + 1] - m.indptr[li]
            src = np.repeat(np.arange(len(states)), counts)
            if src.size == 0:
                continue
            starts = np.repeat(m.indptr[li], counts)
            within = np.arange(src.size) - np.repeat(np.cumsum(counts) - counts, counts)
            k = starts + within
            r_local = m.indices[k]
            tgt = states[src] - to_global(li[src]) + to_global(r_local)
            yield src, tgt, m.data[k]

    def closure(self, seeds: Iterable[int], max_states: int = 5_000_000) -> np.ndarray:
        """Sorted basis of the smallest subspace containing ``seeds`` closed under every term."""
        basis = np.unique(np.asarray(list(seeds), dtype=np.int64))
        frontier = basis
        while frontier.size:
            new = [tgt for _, tgt, _ in self._columns(frontier)]
            cand = np.unique(np.concatenate(new)) if new else np.array([], dtype=np.int64)
            fresh = np.setdiff1d(cand, basis, assume_unique=True)
            basis = np.union1d(basis, fresh)
            frontier = fresh
            if basis.size > max_states:
                raise MemoryError(f"closure exceeds {max_states} states")
        return basis

    def restricted(self, basis: np.ndarray) -> tuple[sp.csr_matrix, float]:
        """Matrix of the operator compressed to ``basis`` and the norm of what leaks out."""
        basis = np.asarray(basis, dtype=np.int64)
        n = len(basis)
        R, C, V = [], [], []
        leak = 0.0
        for src, tgt, val in self._columns(basis):
            pos = np.searchsorted(basis, tgt)
            pos_c = np.minimum(pos, n - 1)
            inside = basis[pos_c] == tgt
            leak += float(np.abs(val[~inside]).sum())
            R.append(pos_c[inside])
            C.append(src[inside])
            V.append(val[inside])
        if not R:
            return sp.csr_matrix((n, n)), leak
        m = sp.coo_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        return m, leak

    def apply(self, vec: np.ndarray, basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``H @ v`` for a vector supported on ``basis``; returns (indices, values)."""
        basis = np.asarray(basis, dtype=np.int64)
        idx, val = [], []
        for src, tgt, v in self._columns(basis):
            idx.append(tgt)
            val.append(v * vec[src])
        if not idx:
            return np.array([], dtype=np.int64), np.array([])
        allidx = np.concatenate(idx)
        u, inv = np.unique(allidx, return_inverse=True)
        return u, np.bincount(inv, weights=np.concatenate(val))

    def expectation(self, basis: np.ndarray, vec: np.ndarray) -> float:
        """<v|H|v> for a vector given on a sorted basis."""
        m, _ = self.restricted(basis)
        return float(vec @ (m @ vec))


@dataclass
class SparseVector:
    """State vector stored by its support on a (possibly huge) product basis."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.dim)
        np.add.at(out, self.indices, self.values)
        return out

    def on(self, basis: np.ndarray) -> np.ndarray:
        """Coefficients on a sorted basis that must contain the support."""
        pos = np.searchsorted(basis, self.indices)
        if np.any(pos >= len(basis)) or np.any(basis[np.minimum(pos, len(basis) - 1)] != self.indices):
            raise ValueError("vector support is not contained in the basis")
        out = np.zeros(len(basis))
        np.add.at(out, pos, self.values)
        return out


@dataclass
class TermBundle:
    """Named local terms with the weights of the full Hamiltonian.

    Terms stay separate so each one can be checked on its own; the weighted
    sum is formed only on request, either on the full product space or on a
    restricted basis.
    """

    terms: dict[str, LocalHamiltonian]
    weights: dict[str, float]
    T: int

    @property
    def site_dims(self) -> tuple[int, ...]:
        return next(iter(self.terms.values())).site_dims

    @property
    def dim(self) -> int:
        return int(np.prod(self.site_dims, dtype=np.int64))

    def operators(self, cap: int = 10**7) -> dict[str, SparseOperator]:
        return {name: h.full(cap) for name, h in self.terms.items()}

    def total(self, cap: int = 10**7, ops: Mapping[str, SparseOperator] | None = None) -> SparseOperator:
        ops = ops if ops is not None else self.operators(cap)
        return weighted_sum(ops, self.weights)

    def closure(self, seeds: Iterable[int], max_states: int = 5_000_000) -> np.ndarray:
        merged = LocalHamiltonian(self.site_dims, [t for h in self.terms.values() for t in h.terms])
        return merged.closure(seeds, max_states)

    def restricted(self, basis: np.ndarray, check: bool = True) -> dict[str, sp.csr_matrix]:
        out = {}
        for name, h in self.terms.items():
            m, leak = h.restricted(basis)
            if check and leak > 0:
                raise ValueError(f"basis is not invariant under {name} (leak {leak:g})")
            out[name] = m
        return out

    def restricted_total(self, basis: np.ndarray, mats: Mapping[str, sp.csr_matrix] | None = None) -> sp.csr_matrix:
        mats = mats if mats is not None else self.restricted(basis)
        total = None
        for name, m in mats.items():
            w = self.weights.get(name, 1.0) * m
            total = w if total is None else total + w
        return sp.csr_matrix(total)

    def energy(self, v: SparseVector) -> dict[str, float]:
        """Per-term expectation values (unweighted) plus the weighted total."""
        basis = np.unique(v.indices)
        coeffs = v.on(basis)
        out = {}
        for name, h in self.terms.items():
            idx, val = h.apply(coeffs, basis)
            pos = np.searchsorted(basis, idx)
            pos_c = np.minimum(pos, len(basis) - 1)
            inside = basis[pos_c] == idx
            out[name] = float(np.dot(coeffs[pos_c[inside]], val[inside]))
        out["total"] = sum(self.weights.get(k, 1.0) * e for k, e in list(out.items()))
        return out
