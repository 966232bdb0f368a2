"""Small verification circuits shipped for tests, the CLI and the acceptance run."""

from __future__ import annotations

from .circuit import LayeredCircuit, parse_circuit

TOY_SOURCES = {
    # n' = 2: no three-wire slots, so the circuit is all identities and the
    # output wire's initial value decides acceptance
    "n2_accept": "QUBITS 2\nROLE 0 input1 output\nROLE 1 witness\n",
    "n2_reject": "QUBITS 2\nROLE 0 ancilla output\nROLE 1 witness\n",
    "n2_coin": "QUBITS 2\nROLE 0 coin output\nROLE 1 ancilla\n",
    # n' = 4, one round
    "n4_accept": "QUBITS 4\nROLE 0 input1\nROLE 1 input1\nROLE 2 output\nROLE 3 witness\nTOF 0 1 2\n",
    "n4_coin": "QUBITS 4\nROLE 0 coin\nROLE 1 input1\nROLE 2 output\nROLE 3 ancilla\nTOF 0 1 2\n",
    "n4_reject": "QUBITS 4\nROLE 0 input0\nROLE 1 input1\nROLE 2 output\nROLE 3 witness\nTOF 0 1 2\n",
    # n' = 4, two rounds; the second X on a wire opens layer 2, whose
    # window still holds that wire on the chain after the data rotation
    "n4_accept_r2": "QUBITS 4\nROLE 0 input1\nROLE 1 input1\nROLE 2 output\nROLE 3 ancilla\nTOF 0 1 2\nX 2\nX 2\n",
    "n4_reject_r2": "QUBITS 4\nROLE 0 input1\nROLE 1 input1\nROLE 2 output\nROLE 3 witness\nTOF 0 1 2\nX 3\nX 2\n",
}


def toy(name: str) -> LayeredCircuit:
    return parse_circuit(TOY_SOURCES[name])


def all_toys() -> dict[str, LayeredCircuit]:
    return {name: toy(name) for name in TOY_SOURCES}
