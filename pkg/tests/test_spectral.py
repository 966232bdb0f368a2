import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqham.spectral import (
    LocalHamiltonian,
    LocalTerm,
    NonConvergence,
    SparseOperator,
    assemble,
    check_stoquastic,
    geometric_bound,
    is_invariant,
    min_eigenvalue,
    read_matrix_market,
    reachable,
    write_matrix_market,
)


def path_laplacian(n):
    m = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    m[0, 0] = m[-1, -1] = 1
    return m


def test_embed_matches_kron():
    rng = np.random.default_rng(0)
    local = rng.normal(size=(9, 9))
    r, c = np.nonzero(local)
    op = assemble((3, 2, 3), [((0, 2), r, c, local[r, c])])
    # sites 0 and 2 act, site 1 is the middle factor
    expect = np.einsum("ikjl,ab->iakjbl", local.reshape(3, 3, 3, 3), np.eye(2)).reshape(18, 18)
    assert np.allclose(op.toarray(), expect)


def test_stoquastic_check_locates_positive_entry():
    m = sp.csr_matrix(np.array([[1.0, -0.5, 0.0], [-0.5, 1.0, 0.5], [0.0, 0.5, 0.0]]))
    rep = check_stoquastic({"bad": SparseOperator(m)})
    assert not rep.passed
    assert rep.worst.name == "bad" and rep.worst.worst_value == 0.5
    assert rep.worst.worst_location in {(1, 2), (2, 1)}


def test_stoquastic_diagonal_only_passes():
    assert check_stoquastic([sp.identity(4, format="csr")]).passed


@pytest.mark.parametrize("n", [2, 5, 17])
def test_path_laplacian_eigenvalue(n):
    lam = min_eigenvalue(sp.csr_matrix(path_laplacian(n) + np.diag([0] * (n - 1) + [1])), "dense").lam_min
    assert lam == pytest.approx(2 - 2 * np.cos(np.pi / (2 * n + 1)), abs=1e-12)


def test_dense_iterative_components_agree():
    rng = np.random.default_rng(1)
    blocks = [path_laplacian(k) + np.diag(rng.uniform(0, 1, k)) for k in (3, 3, 7, 12, 1, 1, 300)]
    m = sp.block_diag(blocks, format="csr")
    perm = rng.permutation(m.shape[0])
    m = m[perm][:, perm]
    d = min_eigenvalue(m, "dense")
    it = min_eigenvalue(m, "iterative")
    co = min_eigenvalue(m, "components")
    assert it.lam_min == pytest.approx(d.lam_min, abs=1e-8)
    assert co.lam_min == pytest.approx(d.lam_min, abs=1e-10)
    assert co.lam_second == pytest.approx(d.lam_second, abs=1e-10)


def test_iterative_reports_nonconvergence():
    m = sp.diags(np.linspace(0, 1, 400)).tocsr()
    with pytest.raises(NonConvergence):
        min_eigenvalue(m, "iterative", maxiter=2)


def test_geometric_bound_two_projectors():
    # null spaces at 45 degrees in the plane: bound = 1 * sin^2(pi/8)
    a1 = np.diag([0.0, 1.0])
    v = np.array([1.0, -1.0]) / np.sqrt(2)
    a2 = np.outer(v, v)
    gb = geometric_bound(a1, a2)
    assert gb.bound == pytest.approx(np.sin(np.pi / 8) ** 2, abs=1e-12)
    assert gb.lam_min_sum >= gb.bound


def test_reachable_and_invariance():
    m = sp.csr_matrix(sp.block_diag([path_laplacian(3), path_laplacian(2)]))
    basis = reachable([m], [1])
    assert list(basis) == [0, 1, 2]
    assert is_invariant(m, basis)
    assert not is_invariant(m, np.array([0, 1]))


def test_local_hamiltonian_restriction_matches_full():
    rng = np.random.default_rng(2)
    a = -np.abs(rng.normal(size=(4, 4)))
    a = a + a.T
    r, c = np.nonzero(a)
    h = LocalHamiltonian((2, 2, 2), [LocalTerm((0, 1), r, c, a[r, c], "a"), LocalTerm((2,), np.array([1]), np.array([1]), np.ones(1), "z")])
    full = h.full().toarray()
    basis = h.closure([0])
    sub, leak = h.restricted(basis)
    assert leak == 0
    assert np.allclose(sub.toarray(), full[np.ix_(basis, basis)])


def test_matrix_market_roundtrip(tmp_path):
    m = sp.csr_matrix(np.array([[1.0, -0.25, 0], [-0.25, 0, -1 / 3], [0, -1 / 3, 2.0]]))
    op = SparseOperator(m, (3,), "prop")
    path = tmp_path / "h.mtx"
    write_matrix_market(path, op)
    back = read_matrix_market(path)
    assert back.site_dims == (3,) and back.name == "prop"
    assert (back.matrix != op.matrix).nnz == 0


psd_pair = st.integers(2, 6).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-2, 2), min_size=n * n, max_size=n * n),
        st.lists(st.floats(-2, 2), min_size=n * n, max_size=n * n),
        st.integers(0, n - 1),
        st.integers(0, n - 1),
    )
)


def _projector_psd(entries, rank_cut):
    n = int(round(len(entries) ** 0.5))
    b = np.array(entries).reshape(n, n)
    a = b @ b.T
    w, v = np.linalg.eigh(a)
    w[:rank_cut] = 0  # force a null space
    return (v * w) @ v.T


@settings(max_examples=60, deadline=None)
@given(psd_pair)
def test_geometric_bound_is_a_lower_bound(data):
    e1, e2, k1, k2 = data
    a1, a2 = _projector_psd(e1, k1 + 1), _projector_psd(e2, k2 + 1)
    gb = geometric_bound(a1, a2)
    assert gb.bound >= 0
    assert gb.lam_min_sum >= gb.bound - 1e-7


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 0), min_size=3, max_size=3), st.lists(st.floats(0, 3), min_size=4, max_size=4))
def test_sum_of_stoquastic_terms_is_stoquastic(offs, diag):
    m = np.diag(diag)
    m[0, 1] = m[1, 0] = offs[0]
    m[1, 2] = m[2, 1] = offs[1]
    m[2, 3] = m[3, 2] = offs[2]
    op = SparseOperator(sp.csr_matrix(m))
    assert check_stoquastic([op, op.scaled(2.0), op + op]).passed


def test_iterative_small_degenerate_blocks():
    # two decoupled sectors with equal ground energy; a single Krylov space misses one
    m = sp.block_diag([np.array([[1.0, -1.0], [-1.0, 1.0]])] * 2)
    r = min_eigenvalue(m, "iterative")
    assert r.lam_min == pytest.approx(0, abs=1e-12) and r.lam_second == pytest.approx(0, abs=1e-12)
