"""Clock traces shared by the geometric constructions.

A trace is the list of legal tag configurations in time order, together
with which circuit wires every data-carrying site holds at each time and
the gate applied by each step.  From it we build the local terms: one PSD
propagation term per step, diagonal checks at a chosen time, and history
states.

Terms are placed on the smallest connected set of sites on which the
configurations involved are the only legal ones matching; a term therefore
acts at exactly the intended time on the legal sector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import Gate
from .spectral import LocalHamiltonian, LocalTerm, SparseVector

MAX_SUPPORT = 5


@dataclass
class ClockTrace:
    """Legal configurations of a clock and the data they carry.

    ``tags[t][s]`` is the tag of site ``s`` at time ``t``; ``wires[t][s]``
    the circuit wires stored in its payload (most significant first);
    ``gates[k]`` the gate of step ``k -> k + 1`` (``None`` for identity).
    """

    tags: list[tuple[str, ...]]
    wires: list[tuple[tuple[int, ...], ...]]
    gates: list[Gate | None]
    n_wires: int
    site_dim: int
    index_of: Callable[[str, tuple[int, ...]], int]
    neighbours: Callable[[int], Iterable[int]]
    labels: list[str] | None = None

    def __post_init__(self):
        if len(self.gates) != len(self.tags) - 1:
            raise ValueError("need one gate per step")

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def n_sites(self) -> int:
        return len(self.tags[0])

    @property
    def site_dims(self) -> tuple[int, ...]:
        return (self.site_dim,) * self.n_sites

    @property
    def dim(self) -> int:
        return self.site_dim**self.n_sites

    @cached_property
    def codes(self) -> np.ndarray:
        names = sorted({tag for cfg in self.tags for tag in cfg})
        lookup = {n: i for i, n in enumerate(names)}
        return np.array([[lookup[tag] for tag in cfg] for cfg in self.tags])

    # -- supports --------------------------------------------------------

    def is_unique(self, sites: Sequence[int], t: int) -> bool:
        sub = self.codes[:, list(sites)]
        return int((sub == sub[t]).all(axis=1).sum()) == 1

    def unique_support(self, required: Iterable[int], targets: Sequence[int], max_size: int = MAX_SUPPORT) -> tuple[int, ...]:
        """Smallest connected site set containing ``required`` that singles out every target time.

        Ties are broken by lexicographic order of the sorted site tuple.
        """
        level = {tuple(sorted(set(required)))}
        while level:
            for sites in sorted(level):
                if all(self.is_unique(sites, t) for t in targets):
                    return sites
            if len(next(iter(level))) >= max_size:
                break
            nxt = set()
            for sites in level:
                for s in sites:
                    for nb in self.neighbours(s):
                        if nb not in sites:
                            nxt.add(tuple(sorted(sites + (nb,))))
            level = nxt
        raise RuntimeError(f"no support of size <= {max_size} singles out times {list(targets)}")

    # -- encoding --------------------------------------------------------

    def carried(self, t: int, sites: Sequence[int]) -> list[int]:
        return sorted(w for s in sites for w in self.wires[t][s])

    def local_index(self, t: int, sites: Sequence[int], bits) -> int:
        idx = 0
        for s in sites:
            payload = tuple(int(bits[w]) for w in self.wires[t][s])
            idx = idx * self.site_dim + self.index_of(self.tags[t][s], payload)
        return idx

    def encode(self, t: int, bits) -> int:
        """Global basis index of configuration ``t`` holding ``bits`` (indexed by wire)."""
        return self.local_index(t, range(self.n_sites), bits)

    def bits_at(self, bits, t: int) -> list[int]:
        bits = list(bits)
        for g in self.gates[:t]:
            if g is not None:
                g.apply(bits)
        return bits

    # -- terms -----------------------------------------------------------

    def step_support(self, k: int) -> tuple[int, ...]:
        """Support of step ``k -> k + 1``: changed sites, the gate's sites, grown to uniqueness."""
        pre, post = self.tags[k], self.tags[k + 1]
        required = [s for s in range(self.n_sites) if pre[s] != post[s] or self.wires[k][s] != self.wires[k + 1][s]]
        g = self.gates[k]
        if g is not None:
            required += [s for s in range(self.n_sites) if set(self.wires[k][s]) & set(g.wires)]
        return self.unique_support(required, [k, k + 1])

    def step_term(self, k: int) -> LocalTerm:
        """(|pre> - |post>)(<pre| - <post|) summed over every payload on the support."""
        sites = self.step_support(k)
        wires = self.carried(k, sites)
        if wires != self.carried(k + 1, sites):
            raise AssertionError(f"step {k + 1} moves data out of its support")
        g = self.gates[k]
        if g is not None and not set(g.wires) <= set(wires):
            raise AssertionError(f"step {k + 1}: gate acts outside its support")
        rows, cols, vals = [], [], []
        for assignment in itertools.product((0, 1), repeat=len(wires)):
            bits = [0] * self.n_wires
            for w, v in zip(wires, assignment):
                bits[w] = v
            p = self.local_index(k, sites, bits)
            if g is not None:
                g.apply(bits)
            q = self.local_index(k + 1, sites, bits)
            rows += [p, q, q, p]
            cols += [p, q, p, q]
            vals += [1.0, 1.0, -1.0, -1.0]
        label = self.labels[k] if self.labels else f"t={k + 1}"
        return LocalTerm(sites, np.array(rows), np.array(cols), np.array(vals), label)

    def prop_terms(self, name: str = "prop") -> LocalHamiltonian:
        return LocalHamiltonian(self.site_dims, [self.step_term(k) for k in range(self.T)], name)

    def check_term(self, t: int, sites: Sequence[int], fixed: dict[int, int] | None = None, coins: Sequence[int] = (), label: str = "") -> LocalTerm:
        """Penalty on configuration ``t`` restricted to ``sites``.

        A carried wire in ``fixed`` costs 1 when it differs from its value;
        a carried wire in ``coins`` costs ``1 - |+><+|`` on that bit.
        """
        fixed = fixed or {}
        wires = self.carried(t, sites)
        mat: dict[tuple[int, int], float] = {}
        for assignment in itertools.product((0, 1), repeat=len(wires)):
            bits = dict(zip(wires, assignment))
            i = self.local_index(t, sites, bits)
            for w in wires:
                if w in fixed and bits[w] != fixed[w]:
                    mat[i, i] = mat.get((i, i), 0.0) + 1.0
                if w in coins:
                    j = self.local_index(t, sites, {**bits, w: 1 - bits[w]})
                    mat[i, i] = mat.get((i, i), 0.0) + 0.5
                    mat[i, j] = mat.get((i, j), 0.0) - 0.5
        keys = sorted(mat)
        r = np.array([k[0] for k in keys], dtype=np.int64)
        c = np.array([k[1] for k in keys], dtype=np.int64)
        return LocalTerm(tuple(sites), r, c, np.array([mat[k] for k in keys]), label)

    def history_state(self, phi0) -> SparseVector:
        """(1/sqrt(T+1)) sum_t Enc_t(U_t ... U_1 phi0); ``phi0`` over 2^n wires, wire 0 most significant."""
        phi0 = np.asarray(phi0, float)
        n = self.n_wires
        idx, vals = [], []
        for x in np.nonzero(phi0)[0]:
            bits = [(int(x) >> (n - 1 - i)) & 1 for i in range(n)]
            for t in range(self.T + 1):
                if t and self.gates[t - 1] is not None:
                    self.gates[t - 1].apply(bits)
                idx.append(self.encode(t, bits))
                vals.append(phi0[x])
        return SparseVector(np.array(idx, dtype=np.int64), np.array(vals) / np.sqrt(self.T + 1), self.dim)

    def legal_basis(self) -> np.ndarray:
        """Every legal configuration with every payload reachable from some input."""
        n = self.n_wires
        out = set()
        for x in itertools.product((0, 1), repeat=n):
            bits = list(x)
            for t in range(self.T + 1):
                if t and self.gates[t - 1] is not None:
                    self.gates[t - 1].apply(bits)
                out.add(self.encode(t, bits))
        return np.array(sorted(out), dtype=np.int64)

    def initial_basis(self) -> np.ndarray:
        n = self.n_wires
        return np.array(sorted({self.encode(0, x) for x in itertools.product((0, 1), repeat=n)}), dtype=np.int64)
