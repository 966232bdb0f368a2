import itertools

import numpy as np
import pytest

from stoqham import grid2d as g
from stoqham.kitaev import initial_state
from stoqham.spectral import check_stoquastic, min_eigenvalue
from stoqham.toys import all_toys, toy


def reject_walk(T):
    return 1 - np.cos(np.pi / (2 * (T + 1)))


def test_site_basis_has_14_states():
    basis = g.site_basis()
    assert len(basis) == g.SITE_DIM == 14
    assert sorted(s.index for s in basis) == list(range(14))
    counts = {t: sum(s.tag == t for s in basis) for t in g.TAGS}
    assert counts == {"U": 1, "D": 1, "BB": 4, "CB": 4, "CC": 4}


def test_grid_dims():
    assert g.grid_dims(2, 1) == (1, 3)
    assert g.grid_dims(4, 1) == (2, 3)
    assert g.grid_dims(4, 2) == (2, 5)


def test_n2_trace_frozen():
    rows = [s.render().split() for s in g.legal_shapes(2, 1)]
    assert rows == [
        ["BB", "U", "U"],
        ["CB", "U", "U"],
        ["CC", "U", "U"],
        ["D", "BB", "U"],
        ["D", "CB", "U"],
        ["D", "CC", "U"],
        ["D", "D", "BB"],
        ["D", "D", "CB"],
        ["D", "D", "CC"],
    ]


@pytest.mark.parametrize("n_prime,R,T", [(2, 1, 8), (4, 1, 16), (4, 2, 28)])
def test_trace_lengths(n_prime, R, T):
    assert len(g.legal_shapes(n_prime, R)) == T + 1


def test_legal_shapes_are_penalty_free():
    for n_prime, R in [(2, 1), (4, 1), (4, 2), (6, 1)]:
        for s in g.legal_shapes(n_prime, R):
            assert g.penalty_energy(s) == 0, s.render()


def test_penalty_exhaustive_n4():
    legal = {s.tags for s in g.legal_shapes(4, 1)}
    rows, cols = g.grid_dims(4, 1)
    missed = []
    for tags in itertools.product(g.TAGS, repeat=rows * cols):
        grid = tuple(tuple(tags[r * cols : (r + 1) * cols]) for r in range(rows))
        if grid not in legal and g.penalty_energy(g.GridShape(grid)) == 0:
            missed.append(grid)
    assert missed == []


def test_penalty_operator_diagonal_matches_rules():
    op = g.build_penalty(2, 1)
    assert op.dim == 14**3
    m = op.matrix
    assert m.nnz == np.count_nonzero(m.diagonal())
    for s in [g.GridShape.parse("D U U"), g.GridShape.parse("BB BB U"), g.GridShape.parse("D D CC")]:
        payload = lambda t: (0, 0) if t in g.ALIVE else None  # noqa: E731
        idx = int(np.ravel_multi_index([g.site_index(t, payload(t)) for t in s.tags[0]], (14, 14, 14)))
        assert m[idx, idx] == g.penalty_energy(s)


def test_schedule_counts():
    ck = g.GridClock(toy("n4_accept"))
    kinds = [s.kind for s in ck.steps]
    # per column n' down half-steps and n'/2 up moves, 2R + 1 columns less the last up phase
    assert kinds.count("down") == 4 * 3
    assert kinds.count("up") == 2 * 2
    assert ck.T == 16


@pytest.mark.parametrize("name", sorted(all_toys()))
def test_every_term_stoquastic(name):
    b = g.build_full_2d(toy(name))
    for h in b.terms.values():
        for t in h.terms:
            off = t.rows != t.cols
            assert (t.vals[off] <= 0).all(), t.label


@pytest.mark.parametrize("name", sorted(all_toys()))
def test_legal_sector_closed_and_history_energy(name):
    c = toy(name)
    b = g.build_full_2d(c)
    basis = b.closure(b.legal_seeds())
    assert np.array_equal(basis, b.legal_basis())
    assert len(basis) == (b.T + 1) * 2**c.n_prime
    phi = initial_state(c, [1] * len(c.wires_with("witness")))
    e = b.energy(g.history_state_2d(c, phi, b.clock))
    assert abs(e["init"]) + abs(e["prop"]) + abs(e["penalty"]) < 1e-12


@pytest.mark.parametrize(
    "name,final",
    [("n2_accept", 0.0), ("n2_coin", 0.5), ("n2_reject", 1.0), ("n4_coin", 0.5), ("n4_reject", 1.0), ("n4_reject_r2", 1.0)],
)
def test_final_energy_is_reject_fraction(name, final):
    c = toy(name)
    b = g.build_full_2d(c)
    phi = initial_state(c, [1] * len(c.wires_with("witness")))
    e = b.energy(g.history_state_2d(c, phi, b.clock))
    assert e["final"] == pytest.approx(final / (b.T + 1), abs=1e-12)


@pytest.mark.parametrize("name", ["n2_reject", "n4_reject", "n4_reject_r2"])
def test_reject_walk_formula(name):
    b = g.build_full_2d(toy(name))
    basis = b.legal_basis()
    lam = min_eigenvalue(b.restricted_total(basis), "dense").lam_min
    assert lam == pytest.approx(reject_walk(b.T), abs=1e-10)


def test_frozen_coin_and_supports():
    b = g.build_full_2d(toy("n4_coin"))
    lam = min_eigenvalue(b.restricted_total(b.legal_basis()), "dense").lam_min
    assert lam == pytest.approx(0.001067, abs=5e-7)
    assert max(len(t.sites) for t in b.terms["prop"].terms) == 3
    assert b.terms["final"].terms[0].sites == (5,)


def test_full_space_n2_matches_restricted():
    b = g.build_full_2d(toy("n2_reject"))
    H = b.total()
    assert check_stoquastic(b.operators()).passed
    full = min_eigenvalue(H, "components").lam_min
    assert full == pytest.approx(reject_walk(8), abs=1e-10)


def test_decode_roundtrip():
    ck = g.GridClock(toy("n4_accept"))
    bits = [1, 1, 0, 1]
    for t in (0, 5, ck.T):
        shape, data = ck.decode(ck.encode(t, ck.bits_at(bits, t)))
        assert shape.tags == ck.shapes[t].tags
        assert [data[w] for w in range(4)] == ck.bits_at(bits, t)
