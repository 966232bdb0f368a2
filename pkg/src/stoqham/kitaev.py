"""Algebraic circuit-to-Hamiltonian baseline with an explicit clock index.

Basis index is ``x * (T + 1) + t`` where ``x`` is the computational basis
state (wire 0 most significant) and ``t`` the clock value.  Used as an
oracle for the geometric constructions, not as a local Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import COIN, LayeredCircuit
from .spectral import SparseOperator


@dataclass
class KitaevBundle:
    H_in: SparseOperator
    H_prop: SparseOperator
    H_out: SparseOperator
    T: int

    def terms(self) -> dict[str, SparseOperator]:
        return {"in": self.H_in, "prop": self.H_prop, "out": self.H_out}

    def total(self) -> SparseOperator:
        return self.H_in + self.H_prop + self.H_out


def bit(x: np.ndarray, w: int, n: int) -> np.ndarray:
    return (x >> (n - 1 - w)) & 1


def step_permutations(c: LayeredCircuit) -> list[np.ndarray]:
    """For each gate in order, the image of every basis state."""
    n = c.n_prime
    xs = np.arange(2**n)
    perms = []
    for slot in c.steps():
        g = slot.gate
        y = xs.copy()
        if g.kind == "Toffoli":
            a, b, t = g.wires
            flip = bit(xs, a, n) & bit(xs, b, n)
            y = xs ^ (flip << (n - 1 - t))
        elif g.kind == "X":
            y = xs ^ (1 << (n - 1 - g.wires[0]))
        perms.append(y)
    return perms


def build_kitaev(c: LayeredCircuit) -> KitaevBundle:
    n = c.n_prime
    perms = step_permutations(c)
    T = len(perms)
    T1 = T + 1
    N = 2**n
    dim = N * T1
    xs = np.arange(N)
    idx = lambda x, t: x * T1 + t  # noqa: E731

    rows, cols, vals = [], [], []
    for t, perm in enumerate(perms, start=1):
        a, b = idx(xs, t - 1), idx(perm, t)
        rows += [a, b, b, a]
        cols += [a, b, a, b]
        vals += [np.full(N, 0.5), np.full(N, 0.5), np.full(N, -0.5), np.full(N, -0.5)]
    H_prop = SparseOperator.from_triples(dim, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), name="prop")

    diag = np.zeros(N)
    for w, v in c.input_bits().items():
        diag += bit(xs, w, n) != v
    rows, cols, vals = [idx(xs, 0)], [idx(xs, 0)], [diag]
    for w in c.wires_with(COIN):
        # 1 - |+><+| on wire w: 1/2 on the diagonal, -1/2 between partners
        partner = xs ^ (1 << (n - 1 - w))
        rows += [idx(xs, 0), idx(xs, 0)]
        cols += [idx(xs, 0), idx(partner, 0)]
        vals += [np.full(N, 0.5), np.full(N, -0.5)]
    H_in = SparseOperator.from_triples(dim, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), name="in")

    reject = (bit(xs, c.output, n) == 0).astype(float)
    H_out = SparseOperator.from_triples(dim, idx(xs, T), idx(xs, T), reject, name="out")
    return KitaevBundle(H_in, H_prop, H_out, T)


def initial_state(c: LayeredCircuit, witness=()) -> np.ndarray:
    """Computational-register start vector: fixed inputs, given witness, coins in |+>."""
    n = c.n_prime
    coins = c.wires_with(COIN)
    phi = np.zeros(2**n)
    for r in range(2 ** len(coins)):
        coin_bits = [(r >> (len(coins) - 1 - i)) & 1 for i in range(len(coins))]
        bits = c.initial_bits(witness, coin_bits)
        phi[int("".join(map(str, bits)), 2)] += 1.0
    return phi / np.linalg.norm(phi)


def history_state(c: LayeredCircuit, phi0: np.ndarray) -> np.ndarray:
    perms = step_permutations(c)
    T1 = len(perms) + 1
    N = len(phi0)
    out = np.zeros(N * T1)
    cur = np.asarray(phi0, float).copy()
    out[np.arange(N) * T1] = cur
    for t, perm in enumerate(perms, start=1):
        nxt = np.zeros(N)
        nxt[perm] = cur
        cur = nxt
        out[np.arange(N) * T1 + t] = cur
    return out / np.sqrt(T1)
