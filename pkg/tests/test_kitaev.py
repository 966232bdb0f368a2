import numpy as np
import pytest

from stoqham.kitaev import build_kitaev, history_state, initial_state
from stoqham.spectral import check_stoquastic, min_eigenvalue
from stoqham.toys import all_toys, toy


def reject_walk(T):
    # half path Laplacian on T + 1 clock values plus a projector on the last one
    return 1 - np.cos(np.pi / (2 * (T + 1)))


def test_dimensions_and_T():
    kb = build_kitaev(toy("n4_accept"))
    # one computational layer of 4 slots, one identity layer of 2
    assert kb.T == 6
    assert kb.H_in.dim == 16 * 7


@pytest.mark.parametrize("name", sorted(all_toys()))
def test_terms_stoquastic_and_symmetric(name):
    kb = build_kitaev(toy(name))
    assert check_stoquastic(kb.terms()).passed
    for op in kb.terms().values():
        assert op.is_symmetric()


@pytest.mark.parametrize("name", ["n2_accept", "n4_accept", "n4_accept_r2"])
def test_accepting_history_state_has_zero_energy(name):
    c = toy(name)
    kb = build_kitaev(c)
    v = history_state(c, initial_state(c, [0] * len(c.wires_with("witness"))))
    assert abs(kb.total().expectation(v)) < 1e-12
    assert abs(min_eigenvalue(kb.total(), "dense").lam_min) < 1e-10


@pytest.mark.parametrize("name", ["n2_reject", "n4_reject", "n4_reject_r2"])
def test_reject_matches_walk_formula(name):
    kb = build_kitaev(toy(name))
    assert min_eigenvalue(kb.total(), "dense").lam_min == pytest.approx(reject_walk(kb.T), abs=1e-12)


def test_frozen_coin_values():
    for name, T, lam in [("n2_coin", 3, 0.01921471959676947), ("n4_coin", 6, 0.006287790106757491)]:
        kb = build_kitaev(toy(name))
        assert kb.T == T
        assert min_eigenvalue(kb.total(), "dense").lam_min == pytest.approx(lam, abs=1e-12)


def test_coin_history_energy_is_reject_fraction():
    c = toy("n4_coin")
    kb = build_kitaev(c)
    v = history_state(c, initial_state(c))
    assert kb.H_out.expectation(v) == pytest.approx(0.5 / (kb.T + 1), abs=1e-12)
    assert abs(kb.H_in.expectation(v)) < 1e-12
    assert abs(kb.H_prop.expectation(v)) < 1e-12


def test_initial_state_coins_in_plus():
    c = toy("n2_coin")
    phi = initial_state(c)
    # wire 0 coin, wire 1 ancilla 0: |00> and |10>
    assert np.allclose(phi, [1 / np.sqrt(2), 0, 1 / np.sqrt(2), 0])
