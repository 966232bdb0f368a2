"""One-dimensional construction: a chain of 19-state particles in blocks of n'-1 sites.

A block holds one layer.  The gate flag CC (two qubits) walks right through
the one-qubit QR sites, applying a three-wire slot at each move.  At the
block end the data is moved, one particle at a time, into the next block by
left/right flags and a turn flag, after which a new round starts.

Tags and payload bits::

    U  unborn      0        CC  gate flag      2
    D  dead        0        QR  qubit, right   1
    T  turn flag   0        QL  qubit, left    1
    BB stored pair 2        RF  right flag     1
                            LF  left flag      1 (always 0 on legal data)

The chain is read with a virtual Dead site on its left and a virtual Unborn
site on its right, both behind a block boundary.  Each reinitialization
puts the last two positions of a block first in the next one, so the
position of a wire inside a block rotates by two per block; gates are
matched to wires, not positions.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import COIN, CircuitError, Gate, LayeredCircuit
from .clock import ClockTrace
from .spectral import LocalHamiltonian, LocalTerm, SparseOperator, SparseVector, TermBundle

UNBORN, DEAD, TURN, BB, CC, QR, QL, RF, LF = "U", "D", "T", "BB", "CC", "QR", "QL", "RF", "LF"
TAGS = (UNBORN, DEAD, TURN, BB, CC, QR, QL, RF, LF)
PAYLOAD_BITS = {UNBORN: 0, DEAD: 0, TURN: 0, BB: 2, CC: 2, QR: 1, QL: 1, RF: 1, LF: 1}
ACTIVE = (CC, RF, LF, TURN)
SITE_DIM = 19
DEFAULT_CAP = 10**7

_OFFSETS = {}
_acc = 0
for _t in TAGS:
    _OFFSETS[_t] = _acc
    _acc += 2 ** PAYLOAD_BITS[_t]
assert _acc == SITE_DIM


@dataclass(frozen=True)
class ParticleState1D:
    tag: str
    payload: tuple[int, ...] = ()

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        if len(self.payload) != PAYLOAD_BITS[self.tag]:
            raise ValueError(f"{self.tag} carries {PAYLOAD_BITS[self.tag]} bits")

    @property
    def index(self) -> int:
        return site_index(self.tag, self.payload)

    @property
    def active(self) -> bool:
        return self.tag in ACTIVE


def site_index(tag: str, payload=()) -> int:
    k = PAYLOAD_BITS[tag]
    payload = tuple(payload) if payload else (0,) * k
    value = 0
    for b in payload:
        value = 2 * value + int(b)
    return _OFFSETS[tag] + value


def site_basis() -> list[ParticleState1D]:
    return [ParticleState1D(t, p) for t in TAGS for p in itertools.product((0, 1), repeat=PAYLOAD_BITS[t])]


TAG_OF_INDEX = np.array([TAGS.index(s.tag) for s in site_basis()])


# -- configurations ------------------------------------------------------


@dataclass(frozen=True)
class ChainConfiguration:
    """Tags plus payloads on a chain of ``(n' - 1) * R`` sites.

    Payload entries are bits, or wire labels when the chain is used to
    track where each wire sits (``None`` marks the constant bit of LF).
    """

    n_prime: int
    tags: tuple[str, ...]
    payloads: tuple[tuple, ...] | None = None

    def __post_init__(self):
        if self.payloads is None:
            object.__setattr__(self, "payloads", tuple((0,) * PAYLOAD_BITS[t] for t in self.tags))
        if len(self.payloads) != len(self.tags):
            raise ValueError("one payload per site")

    @property
    def block(self) -> int:
        return self.n_prime - 1

    @property
    def n_sites(self) -> int:
        return len(self.tags)

    def boundary_after(self, i: int) -> bool:
        """Is there a block boundary between sites ``i`` and ``i + 1``?  Pads count (i = -1, n - 1)."""
        return (i + 1) % self.block == 0

    def tag(self, i: int) -> str:
        if i < 0:
            return DEAD
        if i >= self.n_sites:
            return UNBORN
        return self.tags[i]

    def render(self) -> str:
        parts = []
        for i, t in enumerate(self.tags):
            parts.append(t)
            if i < self.n_sites - 1 and self.boundary_after(i):
                parts.append("|")
        return " ".join(parts)

    def active_sites(self) -> list[int]:
        return [i for i, t in enumerate(self.tags) if t in ACTIVE]

    def qudit_string(self) -> tuple[int, int]:
        """Half-open range left after stripping the Dead prefix and the Unborn suffix."""
        lo, hi = 0, self.n_sites
        while lo < hi and self.tags[lo] == DEAD:
            lo += 1
        while hi > lo and self.tags[hi - 1] == UNBORN:
            hi -= 1
        return lo, hi

    def with_sites(self, changes: dict[int, tuple[str, tuple]]) -> "ChainConfiguration":
        tags, pays = list(self.tags), list(self.payloads)
        for i, (t, p) in changes.items():
            tags[i], pays[i] = t, tuple(p)
        return ChainConfiguration(self.n_prime, tuple(tags), tuple(pays))

    @classmethod
    def parse(cls, n_prime: int, text: str) -> "ChainConfiguration":
        return cls(n_prime, tuple(tok for tok in text.split() if tok != "|"))


def initial_configuration(n_prime: int, R: int, labels: bool = True) -> ChainConfiguration:
    """Block 0 = CC QR ... QR, everything else Unborn.  Payloads are wire labels or zeros."""
    if n_prime < 2 or n_prime % 2 or R < 1:
        raise ValueError("need even n' >= 2 and R >= 1")
    b = n_prime - 1
    tags = [CC] + [QR] * (b - 1) + [UNBORN] * (b * (R - 1))
    if labels:
        pays = [(0, 1)] + [(p + 1,) for p in range(1, b)] + [()] * (b * (R - 1))
    else:
        pays = [(0, 0)] + [(0,)] * (b - 1) + [()] * (b * (R - 1))
    return ChainConfiguration(n_prime, tuple(tags), tuple(pays))


# -- transition rules ----------------------------------------------------


@dataclass(frozen=True)
class TransitionRule1D:
    """Forward rule on sites (i, i+1).

    ``boundary`` is "none" (no block boundary between the two sites),
    "boundary" (one must be there) or "either".  ``data`` maps the two
    left-hand payloads to the right-hand ones.
    """

    number: int
    name: str
    lhs: tuple[str, str]
    rhs: tuple[str, str]
    boundary: str
    data: Callable = field(compare=False, repr=False)

    def boundary_ok(self, has_boundary: bool) -> bool:
        return self.boundary == "either" or (self.boundary == "boundary") == has_boundary


def _lf_zero(p) -> bool:
    return p[0] in (0, None)


RULES: tuple[TransitionRule1D, ...] = (
    TransitionRule1D(1, "gate application", (CC, QR), (QL, CC), "none", lambda a, b: ((a[0],), (a[1], b[0]))),
    TransitionRule1D(2, "right turn", (CC, UNBORN), (LF, BB), "boundary", lambda a, b: ((None,), a)),
    TransitionRule1D(3, "left sweep", (QL, LF), (LF, QR), "none", lambda a, b: ((None,), a)),
    TransitionRule1D(3, "left sweep", (BB, LF), (LF, BB), "boundary", lambda a, b: ((None,), a)),
    TransitionRule1D(4, "left turn", (DEAD, LF), (DEAD, TURN), "either", lambda a, b: ((), ())),
    TransitionRule1D(4, "left turn", (TURN, QR), (DEAD, RF), "none", lambda a, b: ((), b)),
    TransitionRule1D(5, "right sweep", (RF, QR), (QL, RF), "none", lambda a, b: (b, a)),
    TransitionRule1D(5, "right sweep", (RF, BB), (BB, RF), "boundary", lambda a, b: (b, a)),
    TransitionRule1D(6, "right turn", (RF, UNBORN), (LF, QR), "none", lambda a, b: ((None,), a)),
    TransitionRule1D(7, "new round", (TURN, BB), (DEAD, CC), "boundary", lambda a, b: ((), b)),
)


class NoRuleApplies(Exception):
    pass


def _pad_payload(cfg, i):
    return cfg.payloads[i] if 0 <= i < cfg.n_sites else ()


def forward_matches(cfg: ChainConfiguration) -> list[tuple[TransitionRule1D, int]]:
    """Every (rule, i) whose left-hand side sits on sites (i, i+1); pads may match unchanged sites only."""
    out = []
    for i in range(-1, cfg.n_sites):
        pair = (cfg.tag(i), cfg.tag(i + 1))
        for rule in RULES:
            if rule.lhs != pair or not rule.boundary_ok(cfg.boundary_after(i)):
                continue
            # a rule may not rewrite a virtual site
            if (i < 0 and rule.lhs[0] != rule.rhs[0]) or (i + 1 >= cfg.n_sites and rule.lhs[1] != rule.rhs[1]):
                continue
            if LF in rule.lhs:
                k = rule.lhs.index(LF)
                if not _lf_zero(_pad_payload(cfg, i + k)):
                    continue
            out.append((rule, i))
    return out


def backward_matches(cfg: ChainConfiguration) -> list[tuple[TransitionRule1D, int]]:
    out = []
    for i in range(-1, cfg.n_sites):
        pair = (cfg.tag(i), cfg.tag(i + 1))
        for rule in RULES:
            if rule.rhs != pair or not rule.boundary_ok(cfg.boundary_after(i)):
                continue
            if (i < 0 and rule.lhs[0] != rule.rhs[0]) or (i + 1 >= cfg.n_sites and rule.lhs[1] != rule.rhs[1]):
                continue
            out.append((rule, i))
    return out


def apply_rule(cfg: ChainConfiguration, rule: TransitionRule1D, i: int, gate: Callable | None = None) -> ChainConfiguration:
    a, b = _pad_payload(cfg, i), _pad_payload(cfg, i + 1)
    if rule.number == 1 and gate is not None:
        bits = gate(cfg, i, a + b)
        a, b = tuple(bits[:2]), tuple(bits[2:])
    pa, pb = rule.data(a, b)
    changes = {}
    if 0 <= i:
        changes[i] = (rule.rhs[0], pa)
    if i + 1 < cfg.n_sites:
        changes[i + 1] = (rule.rhs[1], pb)
    return cfg.with_sites(changes)


def _unapply_rule(cfg: ChainConfiguration, rule: TransitionRule1D, i: int) -> ChainConfiguration:
    """Tag-level inverse (payloads are not tracked backwards)."""
    changes = {}
    if 0 <= i:
        changes[i] = (rule.lhs[0], (0,) * PAYLOAD_BITS[rule.lhs[0]])
    if i + 1 < cfg.n_sites:
        changes[i + 1] = (rule.lhs[1], (0,) * PAYLOAD_BITS[rule.lhs[1]])
    return cfg.with_sites(changes)


def step_forward(cfg: ChainConfiguration, gate: Callable | None = None) -> ChainConfiguration:
    """Unique successor of a legal configuration.

    ``gate(cfg, i, (a, b, c))`` may rewrite the three payload entries of a
    gate application at sites (i, i+1); default is the identity.
    """
    found = forward_matches(cfg)
    if not found:
        raise NoRuleApplies(cfg.render())
    if len(found) > 1:
        raise AssertionError(f"{len(found)} rules apply to {cfg.render()}")
    rule, i = found[0]
    return apply_rule(cfg, rule, i, gate)


def run(n_prime: int, R: int, max_steps: int | None = None) -> tuple[list[ChainConfiguration], list[tuple[TransitionRule1D, int]]]:
    """Legal trace from the initial configuration, with wire labels as payloads."""
    cfg = initial_configuration(n_prime, R)
    trace, fired = [cfg], []
    while max_steps is None or len(fired) < max_steps:
        found = forward_matches(cfg)
        if not found:
            break
        if len(found) > 1:
            raise AssertionError(f"{len(found)} rules apply to {cfg.render()}")
        rule, i = found[0]
        cfg = apply_rule(cfg, rule, i)
        trace.append(cfg)
        fired.append((rule, i))
    return trace, fired


def cycle_length(n_prime: int) -> int:
    """Transitions in one gate-plus-reset cycle."""
    return (n_prime - 1) * (2 * n_prime - 1)


def trace_length(n_prime: int, R: int) -> int:
    """Closed form for the number of configurations in the full trace."""
    return (2 * n_prime - 1) * (n_prime - 1) * (R - 1) + (n_prime - 1)


def run_cycle(n_prime: int) -> list[ChainConfiguration]:
    """One cycle on two blocks: gates in block 0, then the reset into block 1."""
    trace, _ = run(n_prime, 2, max_steps=cycle_length(n_prime))
    return trace


# the 4-qubit cycle, one row per configuration, and the rule fired after each row
FIG5_ROWS = (
    "CC QR QR | U U U",
    "QL CC QR | U U U",
    "QL QL CC | U U U",
    "QL QL LF | BB U U",
    "QL LF QR | BB U U",
    "LF QR QR | BB U U",
    "T QR QR | BB U U",
    "D RF QR | BB U U",
    "D QL RF | BB U U",
    "D QL BB | RF U U",
    "D QL BB | LF QR U",
    "D QL LF | BB QR U",
    "D LF QR | BB QR U",
    "D T QR | BB QR U",
    "D D RF | BB QR U",
    "D D BB | RF QR U",
    "D D BB | QL RF U",
    "D D BB | QL LF QR",
    "D D BB | LF QR QR",
    "D D LF | BB QR QR",
    "D D T | BB QR QR",
    "D D D | CC QR QR",
)
FIG5_RULES = (1, 1, 2, 3, 3, 4, 4, 5, 5, 6, 3, 3, 4, 4, 5, 5, 6, 3, 3, 4, 7)


def compare_fig5() -> list[tuple[int, str, str]]:
    """Rows where run_cycle(4) differs from the embedded table (empty when they agree)."""
    got = [c.render() for c in run_cycle(4)]
    diffs = [(k + 1, exp, g) for k, (exp, g) in enumerate(itertools.zip_longest(FIG5_ROWS, got, fillvalue="<missing>")) if exp != g]
    return diffs


def render_trace(trace: Sequence[ChainConfiguration]) -> str:
    return "\n".join(c.render() for c in trace) + "\n"


# -- penalty -------------------------------------------------------------


@dataclass(frozen=True)
class PairRule1D:
    """Forbidden: any tag in ``left`` directly left of ``right`` (across a boundary or not)."""

    left: frozenset
    right: str
    boundary: bool
    description: str

    def matches(self, a: str, b: str, has_boundary: bool) -> bool:
        return has_boundary == self.boundary and b == self.right and a in self.left


def allowed_pairs(n_prime: int, R: int = 3) -> set[tuple[str, str, bool]]:
    """(left, right, boundary) triples seen along the legal trace, pads included."""
    trace, _ = run(n_prime, R)
    seen = set()
    for cfg in trace:
        for i in range(-1, cfg.n_sites):
            seen.add((cfg.tag(i), cfg.tag(i + 1), cfg.boundary_after(i)))
    return seen


def penalty_rules_1d(n_prime: int = 4) -> list[PairRule1D]:
    """Complement of the pairs met along the legal trace, grouped by right-hand tag.

    Derived from a three-block reference chain, which contains every kind
    of block (first, interior, last).
    """
    allowed = allowed_pairs(n_prime, 3)
    rules = []
    for bnd in (False, True):
        for right in TAGS:
            left = frozenset(a for a in TAGS if (a, right, bnd) not in allowed)
            if left:
                ok = sorted(a for a in TAGS if (a, right, bnd) in allowed)
                where = "across a boundary" if bnd else "inside a block"
                desc = f"{where}, only {ok or 'nothing'} may sit left of {right}"
                rules.append(PairRule1D(left, right, bnd, desc))
    return rules


def pattern_violations(cfg: ChainConfiguration, rules=None) -> list[tuple[int, PairRule1D | str]]:
    """(site, rule) for every penalized placement; LF carrying a 1 counts as a single-site violation."""
    rules = penalty_rules_1d(cfg.n_prime) if rules is None else rules
    out = []
    for i in range(-1, cfg.n_sites):
        a, b, bnd = cfg.tag(i), cfg.tag(i + 1), cfg.boundary_after(i)
        for r in rules:
            if r.matches(a, b, bnd):
                out.append((i, r))
    for i, t in enumerate(cfg.tags):
        if t == LF and cfg.payloads[i][0] not in (0, None):
            out.append((i, "LF carries a 1"))
    return out


def penalty_energy_1d(cfg: ChainConfiguration, rules=None) -> int:
    return len(pattern_violations(cfg, rules))


def _positional_terms(n_prime: int, R: int) -> list[LocalTerm]:
    """Forbid every tag pair never seen at that exact placement of the legal trace."""
    trace, _ = run(n_prime, R)
    n = trace[0].n_sites
    seen = {(i, cfg.tag(i), cfg.tag(i + 1)) for cfg in trace for i in range(-1, n)}
    tag_of = np.array(TAGS)[TAG_OF_INDEX]
    terms = []
    for i in range(-1, n):
        if i < 0 or i + 1 >= n:
            s = 0 if i < 0 else n - 1
            bad = [k for k in range(SITE_DIM) if ((i, DEAD, tag_of[k]) if i < 0 else (i, tag_of[k], UNBORN)) not in seen]
            nz = np.array(bad, dtype=np.int64)
            if nz.size:
                terms.append(LocalTerm((s,), nz, nz, np.ones(nz.size), f"positional edge {s}"))
            continue
        nz = np.array([a * SITE_DIM + c for a in range(SITE_DIM) for c in range(SITE_DIM) if (i, tag_of[a], tag_of[c]) not in seen], dtype=np.int64)
        terms.append(LocalTerm((i, i + 1), nz, nz, np.ones(nz.size), f"positional {i},{i + 1}"))
    return terms


def penalty_terms_1d(n_prime: int, R: int, positional: bool = False) -> LocalHamiltonian:
    """Pair-table penalty on every placement plus the single-site LF check.

    With ``positional`` the pair table is replaced by one per placement,
    read off the legal trace of this chain; it is still 2-local but no
    longer the same at every block.
    """
    b = n_prime - 1
    n = b * R
    rules = penalty_rules_1d(n_prime)
    idx = np.arange(SITE_DIM)
    tag_of = np.array(TAGS)[TAG_OF_INDEX]
    lf_one = np.array([site_index(LF, (1,))])
    terms = []

    def table(bnd, left_fixed=None, right_fixed=None):
        diag = np.zeros((SITE_DIM, SITE_DIM))
        for r in rules:
            if r.boundary != bnd:
                continue
            for i in idx:
                for j in idx:
                    a = left_fixed or tag_of[i]
                    c = right_fixed or tag_of[j]
                    if r.matches(a, c, bnd):
                        diag[i, j] += 1
        return diag

    if positional:
        terms = _positional_terms(n_prime, R)
        for i in range(n):
            terms.append(LocalTerm((i,), lf_one, lf_one, np.ones(1), f"LF payload {i}"))
        return LocalHamiltonian((SITE_DIM,) * n, terms, "penalty")
    inner, across = table(False), table(True)
    for i in range(n - 1):
        d = (across if (i + 1) % b == 0 else inner).ravel()
        nz = np.nonzero(d)[0]
        terms.append(LocalTerm((i, i + 1), nz, nz, d[nz], f"pair {i},{i + 1}"))
    # the virtual Dead on the left and virtual Unborn on the right
    left = table(True, left_fixed=DEAD)[0]
    right = table(True, right_fixed=UNBORN)[:, 0]
    for site, d in ((0, left), (n - 1, right)):
        nz = np.nonzero(d)[0]
        if nz.size:
            terms.append(LocalTerm((site,), nz, nz, d[nz], f"edge {site}"))
    for i in range(n):
        terms.append(LocalTerm((i,), lf_one, lf_one, np.ones(1), f"LF payload {i}"))
    return LocalHamiltonian((SITE_DIM,) * n, terms, "penalty")


def build_penalty_1d(n_prime: int, R: int, cap: int = DEFAULT_CAP, positional: bool = False) -> SparseOperator:
    return penalty_terms_1d(n_prime, R, positional).full(cap)


LOCALLY_CHECKABLE = "LocallyCheckable"
LENGTH_VIOLATING = "LengthViolating"
LEGAL = "Legal"


def length_ok(cfg: ChainConfiguration) -> bool:
    """One active site and a qudit string of the length its active tag requires."""
    act = cfg.active_sites()
    if len(act) != 1:
        return False
    lo, hi = cfg.qudit_string()
    want = cfg.n_prime - 1 if cfg.tags[act[0]] in (CC, RF) else cfg.n_prime
    return hi - lo == want


def classify_illegal(cfg: ChainConfiguration, rules=None) -> str:
    """LocallyCheckable if a penalty pattern matches; otherwise LengthViolating or Legal.

    Pattern-free chains whose number of active sites is not one are
    reported as LengthViolating as well.
    """
    if pattern_violations(cfg, rules):
        return LOCALLY_CHECKABLE
    return LEGAL if length_ok(cfg) else LENGTH_VIOLATING


def distance_to_checkable(cfg: ChainConfiguration, limit: int, rules=None) -> int | None:
    """Fewest forward/backward rule moves from ``cfg`` to a LocallyCheckable configuration.

    Tag-level breadth-first search; ``None`` if none is found within ``limit``.
    """
    rules = penalty_rules_1d(cfg.n_prime) if rules is None else rules
    start = cfg.tags
    seen = {start}
    queue = deque([(cfg, 0)])
    while queue:
        cur, d = queue.popleft()
        if pattern_violations(cur, rules):
            return d
        if d == limit:
            continue
        nxt = [apply_rule(cur, r, i) for r, i in forward_matches(cur)]
        nxt += [_unapply_rule(cur, r, i) for r, i in backward_matches(cur)]
        for c in nxt:
            if c.tags not in seen:
                seen.add(c.tags)
                queue.append((ChainConfiguration(c.n_prime, c.tags), d + 1))
    return None


# -- circuit on the chain ------------------------------------------------


def _assign_gates(c: LayeredCircuit, trace, fired) -> list[Gate | None]:
    """Match each layer's gates, in order, to the gate applications of its block."""
    b = c.n_prime - 1
    comp = c.computational_layers()
    gates: list[Gate | None] = [None] * len(fired)
    apps: dict[int, list[int]] = {}
    for k, (rule, i) in enumerate(fired):
        if rule.number == 1:
            apps.setdefault(i // b, []).append(k)
    for blk, layer in enumerate(comp):
        todo = [s.gate for s in layer.slots if not s.gate.is_identity]
        pos = 0
        steps = apps.get(blk, [])
        for g in todo:
            while pos < len(steps):
                k = steps[pos]
                rule, i = fired[k]
                held = set(trace[k].payloads[i]) | set(trace[k].payloads[i + 1])
                pos += 1
                if set(g.wires) <= held:
                    gates[k] = g
                    break
            else:
                raise CircuitError(f"layer {blk + 1}: {g.kind}{g.wires} has no matching gate step on the chain")
    return gates


@dataclass
class LineClock:
    """Legal chain trace of a circuit and its clock-trace view."""

    circuit: LayeredCircuit
    configs: list[ChainConfiguration] = field(init=False)
    fired: list = field(init=False)
    trace: ClockTrace = field(init=False, repr=False)

    def __post_init__(self):
        c = self.circuit
        self.configs, self.fired = run(c.n_prime, c.rounds)
        gates = _assign_gates(c, self.configs, self.fired)
        n = self.configs[0].n_sites

        def wires(cfg):
            return tuple(tuple(w for w in p if w is not None) for p in cfg.payloads)

        def neighbours(i):
            return [j for j in (i - 1, i + 1) if 0 <= j < n]

        labels = [f"rule {r.number} at {i} t={k + 1}" for k, (r, i) in enumerate(self.fired)]
        self.trace = ClockTrace(
            tags=[cfg.tags for cfg in self.configs],
            wires=[wires(cfg) for cfg in self.configs],
            gates=gates,
            n_wires=c.n_prime,
            site_dim=SITE_DIM,
            index_of=site_index,
            neighbours=neighbours,
            labels=labels,
        )

    @property
    def T(self) -> int:
        return self.trace.T

    @property
    def n_sites(self) -> int:
        return self.trace.n_sites


def _spare_rule_terms(clock: LineClock) -> list[LocalTerm]:
    """Two-site rule terms at placements that no legal configuration touches.

    They act only on illegal chains, adding the rule dynamics there.
    """
    tr = clock.trace
    n = tr.n_sites
    b = clock.circuit.n_prime - 1
    legal = set()
    for cfg in tr.tags:
        for i in range(n - 1):
            legal.add((i, cfg[i], cfg[i + 1]))
    out = []
    for rule in RULES:
        for i in range(n - 1):
            if not rule.boundary_ok((i + 1) % b == 0):
                continue
            if (i, *rule.lhs) in legal or (i, *rule.rhs) in legal:
                continue
            rows, cols, vals = [], [], []
            ka, kb = PAYLOAD_BITS[rule.lhs[0]], PAYLOAD_BITS[rule.lhs[1]]
            for bits in itertools.product((0, 1), repeat=ka + kb):
                pa, pb = tuple(bits[:ka]), tuple(bits[ka:])
                if (rule.lhs[0] == LF and pa[0]) or (rule.lhs[1] == LF and pb[0]):
                    continue
                qa, qb = rule.data(pa, pb)
                qa = tuple(0 if v is None else v for v in qa)
                qb = tuple(0 if v is None else v for v in qb)
                p = site_index(rule.lhs[0], pa) * SITE_DIM + site_index(rule.lhs[1], pb)
                q = site_index(rule.rhs[0], qa) * SITE_DIM + site_index(rule.rhs[1], qb)
                rows += [p, q, q, p]
                cols += [p, q, p, q]
                vals += [0.5, 0.5, -0.5, -0.5]
            out.append(LocalTerm((i, i + 1), np.array(rows), np.array(cols), np.array(vals), f"rule {rule.number} spare at {i}"))
    return out


def prop_terms_1d(c: LayeredCircuit, clock: LineClock | None = None) -> LocalHamiltonian:
    """½ (|pre> - |post>)(<pre| - <post|) per legal step, plus spare rule placements."""
    clock = clock or LineClock(c)
    terms = []
    for t in clock.trace.prop_terms().terms:
        terms.append(LocalTerm(t.sites, t.rows, t.cols, 0.5 * t.vals, t.label))
    terms += _spare_rule_terms(clock)
    return LocalHamiltonian(clock.trace.site_dims, terms, "prop")


def build_prop_1d(c: LayeredCircuit, cap: int = DEFAULT_CAP) -> SparseOperator:
    return prop_terms_1d(c).full(cap)


def _first_check(tr: ClockTrace, wire: int) -> tuple[int, tuple[int, ...]]:
    """Earliest time, before any gate touches ``wire``, at which a small support isolates it."""
    for max_size in (2, 3, 4):
        for t in range(tr.T + 1):
            if t and tr.gates[t - 1] is not None and wire in tr.gates[t - 1].wires:
                break
            site = next(s for s in range(tr.n_sites) if wire in tr.wires[t][s])
            try:
                return t, tr.unique_support([site], [t], max_size)
            except RuntimeError:
                continue
    raise RuntimeError(f"wire {wire} cannot be checked locally before its first gate")


def init_terms_1d(c: LayeredCircuit, x=None, clock: LineClock | None = None) -> LocalHamiltonian:
    """Input, ancilla and coin checks on the first block, before any gate reads the wire."""
    from .grid2d import _fixed_bits

    clock = clock or LineClock(c)
    tr = clock.trace
    fixed = _fixed_bits(c, x)
    coins = set(c.wires_with(COIN))
    terms = []
    for w in sorted(set(fixed) | coins):
        t, sites = _first_check(tr, w)
        f = {w: fixed[w]} if w in fixed else {}
        cs = [w] if w in coins else []
        terms.append(tr.check_term(t, sites, f, cs, f"init wire {w} t={t}"))
    return LocalHamiltonian(tr.site_dims, terms, "init")


def final_terms_1d(c: LayeredCircuit, clock: LineClock | None = None) -> LocalHamiltonian:
    clock = clock or LineClock(c)
    tr = clock.trace
    site = next(s for s in range(tr.n_sites) if c.output in tr.wires[tr.T][s])
    sites = tr.unique_support([site], [tr.T])
    term = tr.check_term(tr.T, sites, {c.output: 1}, (), "final")
    return LocalHamiltonian(tr.site_dims, [term], "final")


@dataclass
class HamiltonianBundle1D(TermBundle):
    clock: LineClock | None = None

    def legal_seeds(self) -> np.ndarray:
        return self.clock.trace.initial_basis()

    def legal_basis(self) -> np.ndarray:
        return self.clock.trace.legal_basis()


def build_full_1d(c: LayeredCircuit, x=None, delta: float = 1.0, prop_weight: float = 1.0, positional: bool = False) -> HamiltonianBundle1D:
    """H_init + w H_prop + H_penalty + δ H_final; the ½ sits inside every propagation term.

    ``positional`` selects the per-placement penalty table (see penalty_terms_1d).
    """
    clock = LineClock(c)
    terms = {
        "init": init_terms_1d(c, x, clock),
        "prop": prop_terms_1d(c, clock),
        "final": final_terms_1d(c, clock),
        "penalty": penalty_terms_1d(c.n_prime, c.rounds, positional),
    }
    weights = {"init": 1.0, "prop": float(prop_weight), "final": float(delta), "penalty": 1.0}
    return HamiltonianBundle1D(terms, weights, clock.T, clock)


def history_state_1d(c: LayeredCircuit, phi0, clock: LineClock | None = None) -> SparseVector:
    clock = clock or LineClock(c)
    return clock.trace.history_state(phi0)
