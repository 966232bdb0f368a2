from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqham.circuit import (
    ANCILLA,
    ID1,
    ID2,
    ID3,
    TOFFOLI,
    X,
    CircuitError,
    CircuitParseError,
    Gate,
    SlotGate,
    acceptance_probability,
    dump_circuit,
    normalize,
    parse_circuit,
    simulate,
    simulate_reversed,
)
from stoqham.toys import TOY_SOURCES, all_toys, toy


def test_toffoli_truth_table():
    # only 110 <-> 111 move
    assert SlotGate((0, 1, 2), Gate(TOFFOLI, (0, 1, 2))).table() == (0, 1, 2, 3, 4, 5, 7, 6)


def test_toffoli_target_in_middle():
    # controls 0, 2 and target 1: 101 <-> 111
    assert SlotGate((0, 1, 2), Gate(TOFFOLI, (0, 2, 1))).table() == (0, 1, 2, 3, 4, 7, 6, 5)


def test_x_in_three_wire_window():
    assert SlotGate((3, 4, 5), Gate(X, (4,))).table() == (2, 3, 0, 1, 6, 7, 4, 5)


@pytest.mark.parametrize("kind,wires", [(ID1, (0,)), (ID2, (0, 1)), (ID3, (1, 2, 3))])
def test_identities_are_trivial(kind, wires):
    t = SlotGate(wires, Gate(kind, wires)).table()
    assert t == tuple(range(2 ** len(wires)))


def test_gate_validation():
    with pytest.raises(CircuitError):
        Gate(TOFFOLI, (0, 1))
    with pytest.raises(CircuitError):
        Gate(TOFFOLI, (0, 0, 1))
    with pytest.raises(CircuitError):
        Gate("CNOT", (0, 1))


def test_layer_template():
    c = toy("n4_accept")
    comp, ident = c.layers[0], c.layers[1]
    assert comp.kind == "computational" and ident.kind == "identity"
    assert [s.window for s in comp.slots] == [(0,), (0, 1), (0, 1, 2), (1, 2, 3)]
    assert [s.window for s in ident.slots] == [(0, 1), (2, 3)]
    assert comp.slots[2].gate == Gate(TOFFOLI, (0, 1, 2))
    assert comp.slots[3].gate.is_identity


def test_normalize_opens_layer_when_window_used():
    c = normalize([Gate(TOFFOLI, (1, 2, 3)), Gate(TOFFOLI, (0, 1, 2))], ["input1"] * 4, 2)
    assert c.rounds == 2
    slots = [s.gate for layer in c.computational_layers() for s in layer.slots if not s.gate.is_identity]
    assert slots == [Gate(TOFFOLI, (1, 2, 3)), Gate(TOFFOLI, (0, 1, 2))]


def test_normalize_pads_odd_width():
    c = normalize([Gate(TOFFOLI, (0, 1, 2))], ["input1", "input1", "ancilla"], 2)
    assert c.n_prime == 4 and c.roles[3] == ANCILLA and c.original_width == 3


def test_normalize_rejects_wide_gate():
    with pytest.raises(CircuitError):
        normalize([Gate(TOFFOLI, (0, 1, 3))], ["ancilla"] * 4, 0)


def test_toy_rounds_and_acceptance():
    expect = {
        "n2_accept": (2, 1, Fraction(1)),
        "n2_reject": (2, 1, Fraction(0)),
        "n2_coin": (2, 1, Fraction(1, 2)),
        "n4_accept": (4, 1, Fraction(1)),
        "n4_coin": (4, 1, Fraction(1, 2)),
        "n4_reject": (4, 1, Fraction(0)),
        "n4_accept_r2": (4, 2, Fraction(1)),
        "n4_reject_r2": (4, 2, Fraction(0)),
    }
    for name, c in all_toys().items():
        rep = acceptance_probability(c)
        assert (c.n_prime, c.rounds, rep.p_accept) == expect[name], name
        assert not rep.estimate


def test_simulate_known_values():
    c = toy("n4_accept_r2")
    assert simulate(c, (1, 1, 0, 0)) == (1, 1, 1, 0)
    c = toy("n4_reject_r2")
    assert simulate(c, (1, 1, 0, 0)) == (1, 1, 0, 1)


def test_acceptance_sampling_flagged():
    c = toy("n2_coin")
    rep = acceptance_probability(c, cap=1, seed=3)
    assert rep.estimate and rep.confidence_interval is not None
    lo, hi = rep.confidence_interval
    assert lo <= 0.5 <= hi


def test_parse_errors_carry_line_numbers():
    with pytest.raises(CircuitParseError) as e:
        parse_circuit("QUBITS 3\nROLE 0 input1 output\nTOF 0 1\n")
    assert e.value.lineno == 3
    with pytest.raises(CircuitParseError):
        parse_circuit("QUBITS 2\nROLE 0 input1\nROLE 1 witness\n")  # no output
    with pytest.raises(CircuitParseError):
        parse_circuit("QUBITS 2\nROLE 0 banana output\nROLE 1 witness\n")


@pytest.mark.parametrize("name", sorted(TOY_SOURCES))
def test_dump_parse_roundtrip(name):
    c = toy(name)
    assert parse_circuit(dump_circuit(c)) == c


def _random_circuit(draw_gates, n):
    roles = ["input1", "input0", "witness", "ancilla"] * n
    return normalize(draw_gates, roles[:n], 0)


gates_st = st.lists(
    st.one_of(
        st.integers(0, 3).map(lambda w: Gate(X, (w,))),
        st.tuples(st.integers(0, 1), st.permutations([0, 1, 2])).map(lambda p: Gate(TOFFOLI, tuple(p[0] + i for i in p[1]))),
    ),
    max_size=6,
)


@settings(max_examples=60, deadline=None)
@given(gates_st, st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_simulation_is_reversible(gates, x):
    c = _random_circuit(gates, 4)
    y = simulate(c, x)
    assert simulate_reversed(c, y) == tuple(x)


@settings(max_examples=40, deadline=None)
@given(gates_st)
def test_layers_alternate_and_keep_gate_order(gates):
    c = _random_circuit(gates, 4)
    kinds = [layer.kind for layer in c.layers]
    assert kinds == ["computational", "identity"] * c.rounds
    placed = [s.gate for s in c.steps() if not s.gate.is_identity]
    assert placed == gates
