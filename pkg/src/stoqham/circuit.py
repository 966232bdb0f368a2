"""Layered classical reversible verification circuits.

A :class:`LayeredCircuit` alternates computational layers and identity
layers.  A computational layer on ``n`` wires holds ``n`` gate slots: an
identity on wire 0, an identity on wires (0, 1), then ``n - 2`` three-wire
slots where slot ``i`` covers the window ``(i, i+1, i+2)``.  An identity layer
holds ``n/2`` two-wire identities on ``(2i, 2i+1)``.

Every slot gate is a permutation of the computational basis, so ``-U`` never
has a positive entry.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

TOFFOLI = "Toffoli"
X = "X"
ID1, ID2, ID3 = "Identity1", "Identity2", "Identity3"
GATE_ARITY = {TOFFOLI: 3, X: 1, ID1: 1, ID2: 2, ID3: 3}

INPUT0, INPUT1, WITNESS, COIN, ANCILLA = "input0", "input1", "witness", "coin", "ancilla"
ROLES = (INPUT0, INPUT1, WITNESS, COIN, ANCILLA)

DEFAULT_ENUMERATION_CAP = 2**20


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Gate:
    """A classical gate. For Toffoli the last wire is the target."""

    kind: str
    wires: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unsupported gate kind {self.kind!r}")
        if len(self.wires) != GATE_ARITY[self.kind]:
            raise CircuitError(f"{self.kind} needs {GATE_ARITY[self.kind]} wires, got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise CircuitError(f"repeated wire in {self.kind}{self.wires}")

    @property
    def is_identity(self) -> bool:
        return self.kind in (ID1, ID2, ID3)

    def apply(self, bits: list[int]) -> None:
        """Apply in place to a mutable bit list."""
        if self.kind == TOFFOLI:
            a, b, t = self.wires
            bits[t] ^= bits[a] & bits[b]
        elif self.kind == X:
            bits[self.wires[0]] ^= 1


@dataclass(frozen=True)
class SlotGate:
    """One slot of a layer: the wires the slot covers plus the gate placed in it."""

    window: tuple[int, ...]
    gate: Gate

    def table(self) -> tuple[int, ...]:
        """Truth table over the window, as a permutation of ``range(2**len(window))``.

        Index bits are big-endian in window order: window[0] is the most
        significant bit.
        """
        k = len(self.window)
        pos = {w: i for i, w in enumerate(self.window)}
        out = []
        for idx in range(2**k):
            local = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
            if self.gate.kind == TOFFOLI:
                a, b, t = (pos[w] for w in self.gate.wires)
                local[t] ^= local[a] & local[b]
            elif self.gate.kind == X:
                local[pos[self.gate.wires[0]]] ^= 1
            out.append(sum(bit << (k - 1 - i) for i, bit in enumerate(local)))
        return tuple(out)


@dataclass(frozen=True)
class Layer:
    kind: str  # "computational" | "identity"
    slots: tuple[SlotGate, ...]


@dataclass(frozen=True)
class LayeredCircuit:
    n_prime: int
    layers: tuple[Layer, ...]
    roles: tuple[str, ...]
    output: int
    original_width: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.n_prime < 2 or self.n_prime % 2:
            raise CircuitError(f"n' must be even and >= 2, got {self.n_prime}")
        if len(self.roles) != self.n_prime:
            raise CircuitError("one role per wire required")
        if not 0 <= self.output < self.n_prime:
            raise CircuitError("output wire out of range")

    @property
    def rounds(self) -> int:
        """Number of computational layers (R)."""
        return sum(1 for layer in self.layers if layer.kind == "computational")

    def computational_layers(self) -> list[Layer]:
        return [layer for layer in self.layers if layer.kind == "computational"]

    def steps(self) -> list[SlotGate]:
        """Every slot in execution order, identities included."""
        return [slot for layer in self.layers for slot in layer.slots]

    def wires_with(self, role: str) -> list[int]:
        return [w for w, r in enumerate(self.roles) if r == role]

    def input_bits(self) -> dict[int, int]:
        """Wires whose initial value is fixed: inputs and ancillas."""
        fixed = {}
        for w, r in enumerate(self.roles):
            if r == INPUT0 or r == ANCILLA:
                fixed[w] = 0
            elif r == INPUT1:
                fixed[w] = 1
        return fixed

    def initial_bits(self, witness: Sequence[int] = (), coins: Sequence[int] = ()) -> list[int]:
        bits = [0] * self.n_prime
        for w, v in self.input_bits().items():
            bits[w] = v
        wit, coin = self.wires_with(WITNESS), self.wires_with(COIN)
        if len(witness) != len(wit) or len(coins) != len(coin):
            raise CircuitError("witness/coin length does not match the role layout")
        for w, v in zip(wit, witness):
            bits[w] = int(v)
        for w, v in zip(coin, coins):
            bits[w] = int(v)
        return bits


def identity_layer(n: int) -> Layer:
    return Layer("identity", tuple(SlotGate((2 * i, 2 * i + 1), Gate(ID2, (2 * i, 2 * i + 1))) for i in range(n // 2)))


def _computational_layer(n: int, placed: dict[int, Gate]) -> Layer:
    slots = [SlotGate((0,), Gate(ID1, (0,))), SlotGate((0, 1), Gate(ID2, (0, 1)))]
    for i in range(n - 2):
        window = (i, i + 1, i + 2)
        slots.append(SlotGate(window, placed.get(i, Gate(ID3, window))))
    return Layer("computational", tuple(slots))


def normalize(raw: Iterable[Gate], roles: Sequence[str], output: int) -> LayeredCircuit:
    """Pack raw Toffoli/X gates into the alternating layer template.

    Gates keep their order.  A gate goes into the first free window of the
    current computational layer that lies after every slot already used in
    that layer (slots execute top to bottom); otherwise a new layer is opened.
    Toffolis must act within three consecutive wires.  An odd width gets one
    dummy ancilla wire appended.
    """
    roles = list(roles)
    for r in roles:
        if r not in ROLES:
            raise CircuitError(f"unknown role {r!r}")
    n = len(roles)
    n_prime = n + (n % 2)
    roles += [ANCILLA] * (n_prime - n)
    gates = list(raw)
    for g in gates:
        if not isinstance(g, Gate) or g.kind not in (TOFFOLI, X, ID1, ID2, ID3):
            raise CircuitError(f"non-classical gate {g!r}")
        if any(not 0 <= w < n for w in g.wires):
            raise CircuitError(f"gate {g.kind}{g.wires} acts outside {n} wires")
    work = [g for g in gates if not g.is_identity]
    if work and n_prime < 4:
        raise CircuitError("circuits with gates need at least 3 wires")

    layers_placed: list[dict[int, Gate]] = []
    last_used = None
    for g in work:
        lo, hi = min(g.wires), max(g.wires)
        if hi - lo > 2:
            raise CircuitError(f"{g.kind}{g.wires} does not fit three consecutive wires")
        starts = [s for s in range(max(0, hi - 2), min(lo, n_prime - 3) + 1)]
        if not layers_placed or last_used is None:
            layers_placed.append({})
            last_used = -1
        free = [s for s in starts if s > last_used]
        if not free:
            layers_placed.append({})
            last_used = -1
            free = starts
        layers_placed[-1][free[0]] = g
        last_used = free[0]
    if not layers_placed:
        layers_placed.append({})

    layers = []
    for placed in layers_placed:
        layers.append(_computational_layer(n_prime, placed))
        layers.append(identity_layer(n_prime))
    return LayeredCircuit(n_prime, tuple(layers), tuple(roles), output, original_width=n)


def simulate(c: LayeredCircuit, x: Sequence[int]) -> tuple[int, ...]:
    if len(x) != c.n_prime:
        raise CircuitError(f"input has {len(x)} bits, circuit has {c.n_prime} wires")
    bits = [int(b) for b in x]
    for slot in c.steps():
        slot.gate.apply(bits)
    return tuple(bits)


def simulate_reversed(c: LayeredCircuit, y: Sequence[int]) -> tuple[int, ...]:
    """Run the gates backwards; every gate used here is an involution."""
    bits = [int(b) for b in y]
    for slot in reversed(c.steps()):
        slot.gate.apply(bits)
    return tuple(bits)


@dataclass
class AcceptanceReport:
    p_accept: Fraction
    best_witness: tuple[int, ...]
    estimate: bool = False
    confidence_interval: tuple[float, float] | None = None


def _accept_fraction(c: LayeredCircuit, witness, cap: int, seed: int) -> tuple[Fraction, bool, tuple | None]:
    k = len(c.wires_with(COIN))
    if 2**k <= cap:
        hits = sum(simulate(c, c.initial_bits(witness, coins))[c.output] for coins in product((0, 1), repeat=k))
        return Fraction(hits, 2**k), False, None
    rng = random.Random(seed)
    samples = cap
    hits = 0
    for _ in range(samples):
        coins = [rng.getrandbits(1) for _ in range(k)]
        hits += simulate(c, c.initial_bits(witness, coins))[c.output]
    p = hits / samples
    half = 1.96 * math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    return Fraction(hits, samples), True, (max(0.0, p - half), min(1.0, p + half))


def acceptance_probability(
    c: LayeredCircuit,
    witness: Sequence[int] | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
    seed: int = 0,
) -> AcceptanceReport:
    """Exact acceptance probability over uniformly random coins.

    With ``witness=None`` every witness is tried and the best is reported.
    Above ``cap`` coin strings the probability is sampled with a fixed seed
    and flagged as an estimate.
    """
    nw = len(c.wires_with(WITNESS))
    if witness is not None:
        if len(witness) != nw:
            raise CircuitError(f"witness needs {nw} bits")
        candidates = [tuple(int(b) for b in witness)]
    else:
        candidates = list(product((0, 1), repeat=nw))
    best = None
    for w in candidates:
        p, est, ci = _accept_fraction(c, w, cap, seed)
        if best is None or p > best.p_accept:
            best = AcceptanceReport(p, w, est, ci)
    return best


# -- text format ---------------------------------------------------------


def parse_circuit(text: str) -> LayeredCircuit:
    """Parse the line-oriented circuit format and normalize it.

    ``QUBITS n``; ``ROLE w <role> [output]`` (``ROLE w output`` alone means an
    ancilla that is also the output); ``TOF a b c``; ``X a``; ``ID a [b [c]]``.
    """
    n = None
    roles: dict[int, str] = {}
    output = None
    gates: list[Gate] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        head = head.upper()
        try:
            nums = [int(a) for a in args] if head in ("QUBITS", "TOF", "X", "ID") else None
        except ValueError:
            raise CircuitParseError(lineno, f"expected integers after {head}") from None
        if head == "QUBITS":
            if len(nums) != 1 or nums[0] < 1:
                raise CircuitParseError(lineno, "QUBITS takes one positive integer")
            n = nums[0]
        elif head == "ROLE":
            if len(args) < 2:
                raise CircuitParseError(lineno, "ROLE needs a wire and a role")
            try:
                w = int(args[0])
            except ValueError:
                raise CircuitParseError(lineno, "ROLE wire must be an integer") from None
            tags = [a.lower() for a in args[1:]]
            if "output" in tags:
                if output is not None:
                    raise CircuitParseError(lineno, "second output wire")
                output = w
                tags.remove("output")
            if len(tags) > 1 or (tags and tags[0] not in ROLES):
                raise CircuitParseError(lineno, f"bad role {' '.join(args[1:])!r}")
            roles[w] = tags[0] if tags else ANCILLA
        elif head in ("TOF", "X", "ID"):
            kind = {"TOF": TOFFOLI, "X": X}.get(head) or {1: ID1, 2: ID2, 3: ID3}.get(len(nums))
            if kind is None:
                raise CircuitParseError(lineno, "ID takes 1 to 3 wires")
            try:
                gates.append(Gate(kind, tuple(nums)))
            except CircuitError as e:
                raise CircuitParseError(lineno, str(e)) from None
        else:
            raise CircuitParseError(lineno, f"unknown directive {head!r}")
    if n is None:
        raise CircuitParseError(0, "missing QUBITS header")
    if output is None:
        raise CircuitParseError(0, "no wire tagged output")
    missing = [w for w in range(n) if w not in roles]
    if missing or any(not 0 <= w < n for w in roles):
        raise CircuitParseError(0, f"roles must cover wires 0..{n - 1} exactly (missing {missing})")
    return normalize(gates, [roles[w] for w in range(n)], output)


def dump_circuit(c: LayeredCircuit) -> str:
    """Serialize to the text format (gates in execution order, identities dropped)."""
    lines = [f"QUBITS {c.n_prime}"]
    for w, r in enumerate(c.roles):
        lines.append(f"ROLE {w} {r}" + (" output" if w == c.output else ""))
    for slot in c.steps():
        g = slot.gate
        if g.kind == TOFFOLI:
            lines.append("TOF " + " ".join(map(str, g.wires)))
        elif g.kind == X:
            lines.append(f"X {g.wires[0]}")
    return "\n".join(lines) + "\n"
