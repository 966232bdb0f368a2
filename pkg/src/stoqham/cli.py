"""Command-line front end: compile, verify and spectrum runs.

Exit codes: 0 pass, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import grid2d, line1d
from .circuit import CircuitError, LayeredCircuit, acceptance_probability, parse_circuit
from .kitaev import build_kitaev, history_state, initial_state
from .spectral import SparseOperator, check_stoquastic, geometric_bound, min_eigenvalue, read_matrix_market, write_matrix_market
from .toys import TOY_SOURCES, toy

log = logging.getLogger("stoqham")

CONSTRUCTIONS = ("kitaev", "grid2d", "line1d")
DEFAULT_CAP = 10**7
GEOMETRIC_LIMIT = 4000
DEFAULT_DENSE = 10_000


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    circuit: str
    construction: str = "grid2d"
    delta: float = 1.0
    mode: str = "full"
    out: str | None = None
    seed: int = 0
    cap: int = DEFAULT_CAP
    witness: str | None = None
    positional: bool = False


def load_circuit(spec: str) -> LayeredCircuit:
    """A circuit file path, or the name of a shipped toy."""
    if spec in TOY_SOURCES:
        return toy(spec)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"no circuit file or toy named {spec!r}")
    return parse_circuit(path.read_text(encoding="utf-8"))


def _witness(c: LayeredCircuit, text: str | None) -> list[int]:
    k = len(c.wires_with("witness"))
    if text is None:
        return [0] * k
    bits = [int(ch) for ch in text if ch in "01"]
    if len(bits) != k:
        raise UsageError(f"witness needs {k} bits, got {len(bits)}")
    return bits


@dataclass
class Built:
    """Terms, weights and geometry of one construction, full or restricted."""

    terms: dict[str, SparseOperator]
    weights: dict[str, float]
    T: int
    dim: int
    site_dim: int | None
    n_sites: int | None
    grid: tuple[int, int] | None
    basis: np.ndarray | None
    bundle: object

    def total(self) -> SparseOperator:
        items = list(self.terms.items())
        m = sum(self.weights.get(k, 1.0) * op.matrix for k, op in items)
        return SparseOperator(m, items[0][1].site_dims, "total")


def _bundle(c: LayeredCircuit, m: RunManifest):
    x = None
    if m.construction == "grid2d":
        return grid2d.build_full_2d(c, x, m.delta)
    return line1d.build_full_1d(c, x, m.delta, positional=m.positional)


def build(c: LayeredCircuit, m: RunManifest) -> Built:
    if m.construction not in CONSTRUCTIONS:
        raise UsageError(f"unknown construction {m.construction!r}")
    if m.construction == "kitaev":
        kb = build_kitaev(c)
        if kb.H_in.dim > m.cap:
            raise UsageError(f"dimension {kb.H_in.dim} exceeds cap {m.cap}")
        terms = kb.terms()
        weights = {"in": 1.0, "prop": 1.0, "out": m.delta}
        return Built(terms, weights, kb.T, kb.H_in.dim, None, None, None, None, kb)
    b = _bundle(c, m)
    grid = (b.clock.rows, b.clock.cols) if m.construction == "grid2d" else (1, b.clock.n_sites)
    site_dim = b.site_dims[0]
    if m.mode == "full":
        if b.dim > m.cap:
            raise UsageError(f"dimension {b.dim} exceeds cap {m.cap}; use --mode restricted or raise --cap")
        terms = b.operators(m.cap)
        return Built(terms, dict(b.weights), b.T, b.dim, site_dim, len(b.site_dims), grid, None, b)
    if m.mode != "restricted":
        raise UsageError(f"unknown mode {m.mode!r}")
    basis = b.legal_basis()
    mats = b.restricted(basis)
    terms = {k: SparseOperator(v, (), k) for k, v in mats.items()}
    return Built(terms, dict(b.weights), b.T, len(basis), site_dim, len(b.site_dims), grid, basis, b)


def _summary(c: LayeredCircuit, m: RunManifest, built: Built) -> dict:
    return {
        "manifest": asdict(m),
        "n_prime": c.n_prime,
        "rounds": c.rounds,
        "T": built.T,
        "configurations": built.T + 1,
        "dim": built.dim,
        "site_dim": built.site_dim,
        "n_sites": built.n_sites,
        "grid": list(built.grid) if built.grid else None,
        "weights": built.weights,
        "terms": {k: {"nnz": int(op.matrix.nnz)} for k, op in built.terms.items()},
    }


def _emit(summary: dict, out: str | None, name: str) -> None:
    text = json.dumps(summary, indent=2, sort_keys=True, default=float)
    print(text)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n", encoding="utf-8")


# -- commands ------------------------------------------------------------


def cmd_compile(m: RunManifest) -> int:
    c = load_circuit(m.circuit)
    built = build(c, m)
    summary = _summary(c, m, built)
    if m.out:
        Path(m.out).mkdir(parents=True, exist_ok=True)
        files = []
        for name, op in built.terms.items():
            path = Path(m.out) / f"{m.construction}_{name}.mtx"
            write_matrix_market(path, op)
            files.append(path.name)
        summary["files"] = files
        if built.basis is not None:
            np.savetxt(Path(m.out) / f"{m.construction}_basis.txt", built.basis, fmt="%d")
    _emit(summary, m.out, "compile.json")
    return 0


def _history_energy(c: LayeredCircuit, m: RunManifest, built: Built, witness) -> dict[str, float]:
    phi = initial_state(c, witness)
    if m.construction == "kitaev":
        v = history_state(c, phi)
        return {k: op.expectation(v) for k, op in built.terms.items()}
    b = built.bundle
    clock = b.clock
    hv = grid2d.history_state_2d(c, phi, clock) if m.construction == "grid2d" else line1d.history_state_1d(c, phi, clock)
    e = b.energy(hv)
    e.pop("total", None)
    return e


def _reject_probability(c: LayeredCircuit, witness) -> float:
    """Probability that the output is 0 for this witness, coins uniform."""
    from .kitaev import bit, step_permutations

    n = c.n_prime
    phi = initial_state(c, witness) ** 2
    x = np.arange(2**n)
    for perm in step_permutations(c):
        nxt = np.zeros_like(phi)
        nxt[perm[x]] = phi
        phi = nxt
    return float(phi[bit(x, c.output, n) == 0].sum())


def cmd_verify(m: RunManifest, fig5: bool = False, mtx: list[str] | None = None) -> int:
    checks: list[dict] = []

    def record(name, ok, **info):
        checks.append({"check": name, "passed": bool(ok), **info})

    if fig5:
        got = line1d.run_cycle(4)
        print(line1d.render_trace(got), end="")
        diffs = line1d.compare_fig5()
        for row, exp, g in diffs:
            print(f"row {row}: expected {exp!r}, got {g!r}")
        record("fig5", not diffs and len(got) == 22, rows=len(got), differences=len(diffs))
    for path in mtx or []:
        try:
            op = read_matrix_market(path)
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read {path}: {e}") from e
        v = check_stoquastic({path: op}).verdicts[0]
        record("stoquastic", v.passed, term=path, worst=v.worst_value, at=v.worst_location)
    if m.circuit:
        c = load_circuit(m.circuit)
        built = build(c, m)
        rep = check_stoquastic(built.terms)
        for v in rep.verdicts:
            record("stoquastic", v.passed, term=v.name, worst=v.worst_value, at=v.worst_location)
        if m.construction != "kitaev":
            b = built.bundle
            basis = built.basis if built.basis is not None else b.legal_basis()
            pen, _ = b.terms["penalty"].restricted(basis)
            record("penalty_zero_on_legal", abs(pen).sum() == 0, legal_states=len(basis))
        w = _witness(c, m.witness)
        e = _history_energy(c, m, built, w)
        final = "out" if m.construction == "kitaev" else "final"
        expected = _reject_probability(c, w) / (built.T + 1)
        ok = abs(e[final] - expected) <= 1e-10 and all(abs(v) <= 1e-10 for k, v in e.items() if k != final)
        record("history_energy", ok, energies=e, expected_final=expected)
    if not checks:
        raise UsageError("nothing to verify: give --circuit, --fig5 or --mtx")
    passed = all(ch["passed"] for ch in checks)
    _emit({"passed": passed, "checks": checks}, m.out, "verify.json")
    return 0 if passed else 1


def cmd_spectrum(m: RunManifest, compare: bool = False) -> int:
    c = load_circuit(m.circuit)
    t0 = time.perf_counter()
    built = build(c, m)
    H = built.total()
    method = "dense" if H.dim <= 3000 else ("components" if m.construction != "kitaev" else "iterative")
    res = min_eigenvalue(H, method)
    out = {
        "manifest": asdict(m),
        "T": built.T,
        "dim": built.dim,
        "lam_min": res.lam_min,
        "lam_second": res.lam_second,
        "method": res.method,
        "c_T3": res.lam_min * built.T**3,
        "acceptance": float(acceptance_probability(c, seed=m.seed).p_accept),
    }
    # geometric bound on the legal sector: A1 = propagation, A2 = the rest
    gb_dim = built.dim if built.basis is not None or m.construction == "kitaev" else None
    if gb_dim is not None and gb_dim <= GEOMETRIC_LIMIT:
        prop = built.terms["prop"].matrix * built.weights["prop"]
        rest = sum(built.weights.get(k, 1.0) * op.matrix for k, op in built.terms.items() if k != "prop")
        gb = geometric_bound(prop, rest)
        out["geometric_bound"] = gb.bound
    if compare and m.construction != "kitaev" and built.basis is None:
        other = RunManifest(**{**asdict(m), "mode": "restricted"})
        rb = build(c, other)
        rr = min_eigenvalue(rb.total(), "dense" if rb.dim <= DEFAULT_DENSE else "iterative")
        out["lam_min_restricted"] = rr.lam_min
        out["restricted_agrees"] = abs(rr.lam_min - res.lam_min) <= 1e-8
    out["seconds"] = time.perf_counter() - t0
    _emit(out, m.out, "spectrum.json")
    return 0



def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stoqham", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, need_circuit=True):
        q.add_argument("--circuit", required=need_circuit, help="circuit file or toy name")
        q.add_argument("--construction", choices=CONSTRUCTIONS, default="grid2d")
        q.add_argument("--delta", type=float, default=1.0)
        q.add_argument("--mode", choices=("full", "restricted"), default="full")
        q.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest full-space dimension to assemble")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out", help="output directory")
        q.add_argument("--witness", help="witness bits for history-state checks")
        q.add_argument("--positional", action="store_true", help="1D: per-placement penalty table")

    common(sub.add_parser("compile", help="write operator files and a JSON summary"))
    v = sub.add_parser("verify", help="stoquasticity, penalty and history-state checks")
    common(v, need_circuit=False)
    v.add_argument("--fig5", action="store_true", help="print the 4-qubit 1D cycle and diff it against the stored table")
    v.add_argument("--mtx", nargs="*", default=[], help="Matrix Market files to check for stoquasticity")
    s = sub.add_parser("spectrum", help="lowest eigenvalues and the geometric bound")
    common(s)
    s.add_argument("--compare", action="store_true", help="also solve the restricted sector and compare")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    m = RunManifest(
        circuit=args.circuit,
        construction=args.construction,
        delta=args.delta,
        mode=args.mode,
        out=args.out,
        seed=args.seed,
        cap=args.cap,
        witness=args.witness,
        positional=args.positional,
    )
    try:
        if args.command == "compile":
            return cmd_compile(m)
        if args.command == "verify":
            return cmd_verify(m, args.fig5, args.mtx)
        return cmd_spectrum(m, args.compare)
    except (UsageError, CircuitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
