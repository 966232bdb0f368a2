"""Two-dimensional construction on an ``n'/2 x (2R+1)`` grid of 14-state particles.

Each particle holds two consecutive wires of the circuit (row ``m`` holds
wires ``2m`` and ``2m + 1``).  Its tag records where the clock is: Unborn
and Dead carry no data, BB/CB/CC carry the two bits and count how many of
the two sub-qubits the current column has already touched (none, the upper
one, both).

Time runs down a column (one sub-qubit per step, applying the slot gate of
the column's layer) and then moves the data one column to the right, one
row at a time from the bottom up.  Column 0 only applies identities, column
``2k - 1`` runs computational layer ``k``, column ``2k`` an identity layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import COIN, ID1, ID2, ID3, TOFFOLI, X, Gate, LayeredCircuit, SlotGate
from .clock import ClockTrace
from .spectral import LocalHamiltonian, LocalTerm, SparseOperator, SparseVector, TermBundle

UNBORN, DEAD, BB, CB, CC = "U", "D", "BB", "CB", "CC"
TAGS = (UNBORN, DEAD, BB, CB, CC)
ALIVE = (BB, CB, CC)
SITE_DIM = 14
DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class ParticleState2D:
    tag: str
    payload: tuple[int, int] | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        if (self.payload is not None) != (self.tag in ALIVE):
            raise ValueError(f"payload must be present exactly for {ALIVE}")

    @property
    def index(self) -> int:
        return site_index(self.tag, self.payload)

    def __str__(self) -> str:
        if self.payload is None:
            return self.tag
        return f"{self.tag}{self.payload[0]}{self.payload[1]}"


def site_index(tag: str, payload=None) -> int:
    if tag == UNBORN:
        return 0
    if tag == DEAD:
        return 1
    block = 2 + 4 * ALIVE.index(tag)
    return block + 2 * int(payload[0]) + int(payload[1])


def site_basis() -> list[ParticleState2D]:
    out = [ParticleState2D(UNBORN), ParticleState2D(DEAD)]
    for tag in ALIVE:
        out += [ParticleState2D(tag, (a, b)) for a in (0, 1) for b in (0, 1)]
    return out


# tag code (position in TAGS) of every site basis index
TAG_OF_INDEX = np.array([TAGS.index(s.tag) for s in site_basis()])


@dataclass(frozen=True)
class GridShape:
    """Tag assignment on the grid; ``tags[m][c]`` is row ``m``, column ``c``."""

    tags: tuple[tuple[str, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.tags)

    @property
    def cols(self) -> int:
        return len(self.tags[0])

    def __getitem__(self, site: tuple[int, int]) -> str:
        return self.tags[site[0]][site[1]]

    def codes(self) -> np.ndarray:
        return np.array([[TAGS.index(t) for t in row] for row in self.tags])

    def render(self) -> str:
        return "\n".join(" ".join(f"{t:<2}" for t in row).rstrip() for row in self.tags)

    @classmethod
    def parse(cls, text: str) -> "GridShape":
        return cls(tuple(tuple(line.split()) for line in text.strip().splitlines()))


def grid_dims(n_prime: int, R: int) -> tuple[int, int]:
    return n_prime // 2, 2 * R + 1


def legal_shapes(n_prime: int, R: int) -> list[GridShape]:
    """Every clock shape in time order, starting and ending as in the templates."""
    if n_prime < 2 or n_prime % 2 or R < 1:
        raise ValueError("need even n' >= 2 and R >= 1")
    rows, cols = grid_dims(n_prime, R)
    out: list[GridShape] = []

    def add(grid):
        shape = GridShape(tuple(tuple(r) for r in grid))
        if not out or out[-1] != shape:
            out.append(shape)

    for c in range(cols):
        for f in range(n_prime + 1):
            grid = [[DEAD] * c + [UNBORN] * (cols - c) for _ in range(rows)]
            for m in range(rows):
                done = f - 2 * m
                grid[m][c] = CC if done >= 2 else CB if done == 1 else BB
            add(grid)
        if c < cols - 1:
            for k in range(1, rows + 1):
                grid = [[DEAD] * c + [CC] + [UNBORN] * (cols - c - 1) for _ in range(rows)]
                for m in range(rows - k, rows):
                    grid[m][c] = DEAD
                    grid[m][c + 1] = BB
                add(grid)
    return out


def render_trace(shapes) -> str:
    return "\n\n".join(s.render() for s in shapes) + "\n"


# -- penalty -------------------------------------------------------------


@dataclass(frozen=True)
class PatternRule2D:
    """Forbidden tag pattern on one site or an adjacent pair.

    Horizontal pairs are (left, right), vertical pairs (top, bottom).
    ``where`` limits single-site rules to the first or last column.
    """

    geometry: str  # "single" | "horizontal" | "vertical"
    forbidden: frozenset
    description: str
    where: str = "all"

    def placements(self, rows: int, cols: int) -> list[tuple[tuple[int, int], ...]]:
        if self.geometry == "single":
            cs = {"all": range(cols), "first-column": [0], "last-column": [cols - 1]}[self.where]
            return [((m, c),) for m in range(rows) for c in cs]
        if self.geometry == "horizontal":
            return [((m, c), (m, c + 1)) for m in range(rows) for c in range(cols - 1)]
        return [((m, c), (m + 1, c)) for m in range(rows - 1) for c in range(cols)]

    def matches(self, shape: GridShape, sites) -> bool:
        return tuple(shape[s] for s in sites) in self.forbidden


def _pairs(left, right) -> frozenset:
    return frozenset(itertools.product(left, right))


def _except(*keep) -> tuple[str, ...]:
    return tuple(t for t in TAGS if t not in keep)


def penalty_rules() -> list[PatternRule2D]:
    h, v = "horizontal", "vertical"
    return [
        PatternRule2D(h, _pairs(_except(DEAD), [DEAD]), "only Dead sits left of Dead"),
        PatternRule2D(h, _pairs([UNBORN], _except(UNBORN)), "only Unborn sits right of Unborn"),
        PatternRule2D(h, _pairs([DEAD], [UNBORN]), "Dead and Unborn are never horizontally adjacent"),
        PatternRule2D(h, _pairs(ALIVE, ALIVE), "two alive sites are never horizontally adjacent"),
        PatternRule2D(v, _pairs(_except(UNBORN), [UNBORN]), "only Unborn sits above Unborn"),
        PatternRule2D(v, _pairs([UNBORN], _except(UNBORN, BB)), "below Unborn only Unborn or BB"),
        PatternRule2D(v, _pairs([DEAD], _except(DEAD)), "only Dead sits below Dead"),
        PatternRule2D(v, _pairs([BB, CB], [DEAD]), "BB and CB never sit above Dead"),
        PatternRule2D(v, _pairs([BB], _except(BB)), "only BB sits below BB"),
        PatternRule2D(v, _pairs(_except(CC), [CB, CC]), "only CC sits above CB or CC"),
        PatternRule2D("single", frozenset({(UNBORN,)}), "the first column is never Unborn", "first-column"),
        PatternRule2D("single", frozenset({(DEAD,)}), "the last column is never Dead", "last-column"),
    ]


def penalty_energy(shape: GridShape, rules=None) -> int:
    """Number of (rule, placement) matches; the diagonal of H_penalty on this shape."""
    rules = penalty_rules() if rules is None else rules
    return sum(r.matches(shape, p) for r in rules for p in r.placements(shape.rows, shape.cols))


def _sid(site, cols) -> int:
    return site[0] * cols + site[1]


def penalty_terms(n_prime: int, R: int) -> LocalHamiltonian:
    rows, cols = grid_dims(n_prime, R)
    tables: dict[tuple, np.ndarray] = {}
    for rule in penalty_rules():
        k = 1 if rule.geometry == "single" else 2
        codes = {tuple(TAGS.index(t) for t in pat) for pat in rule.forbidden}
        local = np.array(
            [tuple(TAG_OF_INDEX[i] for i in idx) in codes for idx in itertools.product(range(SITE_DIM), repeat=k)],
            dtype=float,
        )
        for p in rule.placements(rows, cols):
            key = tuple(_sid(s, cols) for s in p)
            tables[key] = tables.get(key, 0) + local
    terms = []
    for sites, diag in sorted(tables.items()):
        nz = np.nonzero(diag)[0]
        terms.append(LocalTerm(sites, nz, nz, diag[nz], "penalty"))
    return LocalHamiltonian((SITE_DIM,) * (rows * cols), terms, "penalty")


def build_penalty(n_prime: int, R: int, cap: int = DEFAULT_CAP) -> SparseOperator:
    return penalty_terms(n_prime, R).full(cap)


# -- clock schedule ------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    """Step ``t - 1 -> t`` of the clock."""

    t: int
    kind: str  # "down" | "up"
    column: int
    slot: SlotGate | None  # None for the upward moves
    changed: tuple[tuple[int, int], ...]


def _column_slots(c: LayeredCircuit, column: int) -> tuple[SlotGate, ...]:
    n = c.n_prime
    if column >= 1:
        layer = c.layers[column - 1]
        if layer.kind == "computational":
            return layer.slots
    slots = [SlotGate((0,), Gate(ID1, (0,))), SlotGate((0, 1), Gate(ID2, (0, 1)))]
    slots += [SlotGate((i, i + 1, i + 2), Gate(ID3, (i, i + 1, i + 2))) for i in range(n - 2)]
    return tuple(slots)


def schedule(c: LayeredCircuit) -> list[Transition]:
    n, R = c.n_prime, c.rounds
    rows, cols = grid_dims(n, R)
    if len(c.layers) != 2 * R:
        raise ValueError("circuit must alternate computational and identity layers")
    out: list[Transition] = []
    for col in range(cols):
        for j, slot in enumerate(_column_slots(c, col)):
            if slot.gate.kind not in (TOFFOLI, X, ID1, ID2, ID3):
                raise ValueError(f"gate {slot.gate.kind} would break stoquasticity")
            out.append(Transition(len(out) + 1, "down", col, slot, ((j // 2, col),)))
        if col < cols - 1:
            for m in range(rows - 1, -1, -1):
                out.append(Transition(len(out) + 1, "up", col, None, ((m, col), (m, col + 1))))
    return out


@dataclass
class GridClock:
    """Legal shapes, the step schedule and the clock trace of a circuit."""

    circuit: LayeredCircuit
    shapes: list[GridShape] = field(init=False)
    steps: list[Transition] = field(init=False)
    trace: ClockTrace = field(init=False, repr=False)

    def __post_init__(self):
        c = self.circuit
        self.shapes = legal_shapes(c.n_prime, c.rounds)
        self.steps = schedule(c)
        if len(self.steps) != len(self.shapes) - 1:
            raise AssertionError("schedule and shape list disagree")
        rows, cols = self.rows, self.cols

        def wires(shape):
            return tuple((2 * m, 2 * m + 1) if shape[(m, col)] in ALIVE else () for m in range(rows) for col in range(cols))

        def neighbours(sid):
            m, col = divmod(sid, cols)
            return [_sid(nb, cols) for nb in _neighbours((m, col), rows, cols)]

        gates = [st.slot.gate if st.slot is not None and not st.slot.gate.is_identity else None for st in self.steps]
        self.trace = ClockTrace(
            tags=[tuple(t for row in s.tags for t in row) for s in self.shapes],
            wires=[wires(s) for s in self.shapes],
            gates=gates,
            n_wires=c.n_prime,
            site_dim=SITE_DIM,
            index_of=lambda tag, payload: site_index(tag, payload or None),
            neighbours=neighbours,
            labels=[f"{st.kind} col={st.column} t={st.t}" for st in self.steps],
        )

    @property
    def rows(self) -> int:
        return self.shapes[0].rows

    @property
    def cols(self) -> int:
        return self.shapes[0].cols

    @property
    def T(self) -> int:
        return len(self.steps)

    @property
    def site_dims(self) -> tuple[int, ...]:
        return (SITE_DIM,) * (self.rows * self.cols)

    def encode(self, t: int, bits) -> int:
        """Global basis index of shape ``t`` carrying the computational state ``bits``."""
        return self.trace.encode(t, bits)

    def bits_at(self, bits, t: int) -> list[int]:
        return self.trace.bits_at(bits, t)

    def support(self, step: Transition) -> list[tuple[int, int]]:
        return [divmod(s, self.cols) for s in self.trace.step_support(step.t - 1)]

    def decode(self, index: int) -> tuple[GridShape, dict[int, int]]:
        digits = []
        for _ in range(self.rows * self.cols):
            index, d = divmod(index, SITE_DIM)
            digits.append(d)
        digits = digits[::-1]
        basis = site_basis()
        tags, bits = [], {}
        for m in range(self.rows):
            row = []
            for col in range(self.cols):
                st = basis[digits[m * self.cols + col]]
                row.append(st.tag)
                if st.payload is not None:
                    bits[2 * m], bits[2 * m + 1] = st.payload
            tags.append(tuple(row))
        return GridShape(tuple(tags)), bits


def _neighbours(site, rows, cols):
    m, c = site
    for dm, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        if 0 <= m + dm < rows and 0 <= c + dc < cols:
            yield (m + dm, c + dc)


# -- Hamiltonian terms ---------------------------------------------------


def prop_terms(c: LayeredCircuit, clock: GridClock | None = None) -> LocalHamiltonian:
    """One PSD term (|pre> - |post>)(<pre| - <post|) per clock step, over all payloads."""
    clock = clock or GridClock(c)
    return clock.trace.prop_terms()


def build_prop(c: LayeredCircuit, cap: int = DEFAULT_CAP) -> SparseOperator:
    return prop_terms(c).full(cap)


def _fixed_bits(c: LayeredCircuit, x) -> dict[int, int]:
    fixed = dict(c.input_bits())
    if x is not None:
        items = x.items() if isinstance(x, dict) else zip(sorted(w for w in fixed), x)
        fixed.update({int(w): int(v) for w, v in items})
    return fixed


def init_terms(c: LayeredCircuit, x=None, clock: GridClock | None = None) -> LocalHamiltonian:
    """Column-0 checks on BB sites: wrong fixed bits cost 1, coins cost 1 - |+><+|.

    ``x`` optionally overrides the fixed (input and ancilla) wires, either
    as a mapping wire -> bit or as a bit sequence in wire order.  Column 0
    only runs identities, so the BB payload there is the initial data
    whenever it is present.
    """
    clock = clock or GridClock(c)
    fixed = _fixed_bits(c, x)
    coins = set(c.wires_with(COIN))
    terms = []
    for m in range(clock.rows):
        own = {w for w in (2 * m, 2 * m + 1) if w in fixed or w in coins}
        if not own:
            continue
        # shape 0 shows every column-0 site as BB; the check is single-site
        term = clock.trace.check_term(0, [_sid((m, 0), clock.cols)], fixed, sorted(coins), f"init row {m}")
        terms.append(term)
    return LocalHamiltonian(clock.site_dims, terms, "init")


def final_terms(c: LayeredCircuit, clock: GridClock | None = None) -> LocalHamiltonian:
    """Projector onto 'output bit is 0' at the final shape.

    The support starts at the output wire's site in the last column and
    grows until the final shape is the only legal shape matching it, so the
    check fires at exactly one clock time.
    """
    clock = clock or GridClock(c)
    tr = clock.trace
    sites = tr.unique_support([_sid((c.output // 2, clock.cols - 1), clock.cols)], [tr.T])
    term = tr.check_term(tr.T, sites, {c.output: 1}, (), "final")
    return LocalHamiltonian(clock.site_dims, [term], "final")


def build_init(c: LayeredCircuit, x=None, cap: int = DEFAULT_CAP) -> SparseOperator:
    return init_terms(c, x).full(cap)


def build_final(c: LayeredCircuit, cap: int = DEFAULT_CAP) -> SparseOperator:
    return final_terms(c).full(cap)


@dataclass
class HamiltonianBundle2D(TermBundle):
    clock: GridClock | None = None

    def __getattr__(self, name):
        # H_init, H_prop, ... materialize the full-space operator on demand
        if name.startswith("H_") and name[2:] in self.__dict__.get("terms", {}):
            return self.terms[name[2:]].full(DEFAULT_CAP)
        raise AttributeError(name)

    def legal_seeds(self) -> np.ndarray:
        """Initial shape with every payload: the seeds of the legal sector."""
        return self.clock.trace.initial_basis()

    def legal_basis(self) -> np.ndarray:
        """All legal shapes with all payloads, (T + 1) * 2^n' states."""
        return self.clock.trace.legal_basis()


def build_full_2d(c: LayeredCircuit, x=None, delta: float = 1.0) -> HamiltonianBundle2D:
    clock = GridClock(c)
    terms = {
        "init": init_terms(c, x, clock),
        "prop": prop_terms(c, clock),
        "final": final_terms(c, clock),
        "penalty": penalty_terms(c.n_prime, c.rounds),
    }
    weights = {"init": 1.0, "prop": 0.5, "final": float(delta), "penalty": 1.0}
    return HamiltonianBundle2D(terms, weights, clock.T, clock)


def history_state_2d(c: LayeredCircuit, phi0, clock: GridClock | None = None) -> SparseVector:
    """(1/sqrt(T+1)) sum_t Enc(U_t ... U_1 phi0) for a vector phi0 over the 2^n' wire states."""
    clock = clock or GridClock(c)
    return clock.trace.history_state(phi0)
