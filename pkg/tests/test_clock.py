import numpy as np
import pytest

from stoqham.circuit import TOFFOLI, Gate
from stoqham.clock import ClockTrace


def chain(tags, wires, gates):
    def index_of(tag, payload):
        base = {"A": 0, "B": 2, "C": 4}[tag]
        return base + (payload[0] if payload else 0)

    n = len(tags[0])
    return ClockTrace(tags, wires, gates, 3, 6, index_of, lambda s: [x for x in (s - 1, s + 1) if 0 <= x < n])


@pytest.fixture
def walk():
    # a marker C walks right over three sites, each site holds one wire
    tags = [("C", "A", "A"), ("B", "C", "A"), ("B", "B", "C")]
    wires = [((0,), (1,), (2,))] * 3
    return chain(tags, wires, [None, Gate(TOFFOLI, (0, 1, 2))])


def test_unique_support_grows_until_unique(walk):
    # site 0 alone separates t=0 from t=1, 2
    assert walk.unique_support([0], [0]) == (0,)
    # site 1 reads C only at t=1
    assert walk.unique_support([1], [1]) == (1,)
    # B on site 0 appears at t=1 and t=2; site 2 is needed to tell them apart
    assert walk.unique_support([0], [2]) == (0, 1)


def test_step_term_is_psd_projector_pair(walk):
    t = walk.step_term(1)
    assert set(t.sites) >= {0, 1, 2}  # the gate touches all three wires
    local = np.zeros((216, 216))
    np.add.at(local, (t.rows, t.cols), t.vals)
    w = np.linalg.eigvalsh(local)
    assert w.min() > -1e-12
    # one rank-2 (|pre> - |post>) pattern per payload: eigenvalue 2, eight times
    assert np.isclose(w, 2).sum() == 8


def test_history_state_and_legal_basis(walk):
    phi = np.zeros(8)
    phi[0b110] = 1.0
    v = walk.history_state(phi)
    assert len(v.indices) == 3 and np.isclose(np.linalg.norm(v.values), 1)
    assert len(walk.legal_basis()) == 3 * 8
    assert len(walk.initial_basis()) == 8


def test_check_term_coin_block(walk):
    t = walk.check_term(0, (0,), coins=[0])
    # 1 - |+><+| on the payload bit of C at site 0
    m = np.zeros((6, 6))
    np.add.at(m, (t.rows, t.cols), t.vals)
    assert np.allclose(m[4:6, 4:6], [[0.5, -0.5], [-0.5, 0.5]])
