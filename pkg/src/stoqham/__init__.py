"""Stoquastic geometrically local Hamiltonians from classical reversible circuits."""

from .circuit import Gate, LayeredCircuit, normalize, parse_circuit, simulate, acceptance_probability

__all__ = [
    "Gate",
    "LayeredCircuit",
    "normalize",
    "parse_circuit",
    "simulate",
    "acceptance_probability",
]

__version__ = "0.1.0"
