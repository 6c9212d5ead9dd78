"""Command-line entry point.

Exit codes: 0 success or verified claim, 1 error or refuted claim,
2 unknown within budget. Reports go to stdout (text, or JSON with
``--json``); diagnostics and wall time go to stderr.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import io, limits
from .complexes import (
    ComplexParseError,
    SimplicialComplex,
    collective_unavoidability_witness,
    dumps_complex,
    generate,
    loads_complex,
    parse_graph,
    pigeonhole_unavoidable,
    skeleta_family,
)
from .core import (
    BeadString,
    Measure,
    Necklace,
    PiecewiseConstant,
    ValidationError,
    bead_counts,
    discrete_to_continuous,
    ks_parameters,
)
from .envyfree import ak
from .envyfree.preferences import (
    PreferenceMatrix,
    contains_point_preference,
    family_of,
    fewest_pieces_preference,
    length_threshold_preference,
    longest_preference,
    measure_preference,
)
from .envyfree.solver import (
    SolverConfig,
    shares_float,
    solve_envy_free,
    solve_envy_free_binary,
    solve_envy_free_equicardinal,
)
from .homology import connectivity_certificate
from .splitter import ConstraintSpec, PreconditionError, SearchBudget, brute_force_oracle, solve

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunReport:
    command: List[str]
    status: str
    digest: Optional[str] = None
    seed: Optional[int] = None
    result: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    wall_time: float = 0.0  # kept out of the emitted report so reports stay byte-identical

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "status": self.status,
            "digest": self.digest,
            "seed": self.seed,
            "result": self.result,
            "verdicts": self.verdicts,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, default=_jsonable)

    def to_text(self) -> str:
        lines = [f"command: {' '.join(self.command)}", f"status: {self.status}"]
        if self.digest:
            lines.append(f"digest: {self.digest}")
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        for key, value in self.result.items():
            if key == "table":
                lines.extend(value)
            else:
                lines.append(f"{key}: {_text(value)}")
        for key, value in self.verdicts.items():
            lines.append(f"verdict {key}: {'pass' if value else 'fail'}")
        return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return io.format_rational(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _text(value) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(_text(v) for v in value) if value else "-"
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


# ---------------------------------------------------------------- inputs

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _load_instance(spec: str, r: Optional[int]) -> io.Instance:
    if spec.startswith("beads:"):
        return io.beads_instance(spec[len("beads:"):], r or 2)
    inst = io.loads_instance(_read_text(spec))
    if inst.necklace is None:
        raise UsageError(f"{spec}: no necklace record")
    if r is not None and r != inst.necklace.thieves:
        nk = inst.necklace
        inst.necklace = Necklace(nk.measures, nk.beads, r)
    return inst


def _load_family(spec: str, r: int, n: int) -> List[SimplicialComplex]:
    """``thm32`` (cardinality skeleta) or a file of complexes separated by ``---`` lines."""
    if spec == "thm32":
        return skeleta_family(r, n)
    m = (r - 1) * (n + 1) + 1
    blocks, cur = [], []
    for line in _read_text(spec).splitlines():
        if line.strip() == "---":
            blocks.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    blocks.append("\n".join(cur))
    family = []
    for text in blocks:
        K = loads_complex(text)
        family.append(SimplicialComplex(K.facets, range(m)))
    return family


def _parse_pwc(args: str) -> PiecewiseConstant:
    """``0,1/2,1;3/2,1/2``: breakpoints then densities."""
    bps, _, dens = args.partition(";")
    return PiecewiseConstant(tuple(Fraction(b) for b in bps.split(",")), tuple(Fraction(d) for d in dens.split(",")))


def _preference(spec: str):
    name, _, args = spec.partition(":")
    if name == "measure":
        return measure_preference(_parse_pwc(args))
    if name == "fewest":
        return fewest_pieces_preference(int(args))
    if name == "contains":
        return contains_point_preference(float(args))
    if name == "length":
        return length_threshold_preference(float(args))
    if name == "longest":
        return longest_preference()
    raise UsageError(f"unknown preference {spec!r} (measure, fewest, contains, length, longest)")


def _partition_oracle(spec: str, r: int, rng: random.Random) -> ak.PartitionOracle:
    name, _, args = spec.partition(":")
    if name == "longest":
        return ak.longest_piece(r)
    if name == "contains":
        return ak.contains_point(float(args), r)
    if name == "contains-empty":
        return ak.contains_point(float(args), r, or_empty=True)
    if name == "threshold":
        return ak.threshold_or_empty(float(args), r)
    if name == "any":
        return ak.any_nonempty(r)
    if name == "signed":
        return ak.signed_measure(_parse_pwc(args), r)
    if name == "random":
        return ak.random_builtin(r, rng)
    raise UsageError(f"unknown partition preference {spec!r} "
                     "(longest, contains, contains-empty, threshold, any, signed, random)")


def _per_player(specs: Sequence[str], r: int, build) -> list:
    if len(specs) == 1:
        one = build(specs[0])
        return [one] * r
    if len(specs) != r:
        raise UsageError(f"give one --prefs for all players or exactly r={r}, got {len(specs)}")
    return [build(s) for s in specs]


# ---------------------------------------------------------------- commands

def cmd_split(args) -> Tuple[RunReport, int]:
    inst = _load_instance(args.instance, args.r)
    nk = inst.necklace
    if nk.beads is None:
        raise UsageError("split needs a bead string")
    beads, r = nk.beads, nk.thieves
    n = len(beads.types)
    if args.equicardinal:
        constraint = ConstraintSpec.equicardinal(*ks_parameters(r, n))
    elif args.graph:
        constraint = ConstraintSpec.for_graph(parse_graph(args.graph))
    elif args.family:
        constraint = ConstraintSpec.complex_family(_load_family(args.family, r, n))
    else:
        constraint = ConstraintSpec.none()
    budget = SearchBudget(args.max_cuts, args.node_limit, args.time_limit, args.seed)
    kw = {"workers": args.workers}
    if constraint.kind == "complex_family":
        kw["strict"] = not args.lenient
    res = solve(beads, r, constraint, budget, **kw)
    L = len(beads)
    result = {"r": r, "beads": str(beads), "search": res.status, "nodes": res.nodes, "notes": list(res.notes)}
    verdicts = {}
    if res.report is not None:
        pa = res.report.pa
        result["cuts"] = [int(c * L) for c in pa.cuts]
        result["allocation"] = list(pa.allocation)
        result["profile"] = list(res.report.cardinality_profile)
        counts = bead_counts(beads, pa, r)
        target = [c // r for c in beads.multiplicities.values()]
        verdicts["fair"] = all(row == target for row in counts)
        verdicts["constraint"] = constraint.check(pa, r)
    if args.oracle:
        max_cuts = args.max_cuts if args.max_cuts is not None else (r - 1) * n
        found = brute_force_oracle(beads, r, max_cuts, constraint, limit=1)
        result["oracle"] = "sat" if found else "unsat"
        if res.status != "unknown":
            verdicts["oracle_agrees"] = (res.status == "sat") == bool(found)
    code = {"sat": EXIT_OK, "unsat": EXIT_FAIL, "unknown": EXIT_UNKNOWN}[res.status]
    if not all(verdicts.values()):
        code = EXIT_FAIL
    return RunReport([], res.status, inst.digest(), args.seed, result, verdicts), code


def _solver_config(args) -> SolverConfig:
    return SolverConfig(epsilon=args.eps, grid=args.grid, restarts=args.restarts, seed=args.seed,
                        time_limit=args.time_limit)


def cmd_envy_free(args) -> Tuple[RunReport, int]:
    inst = _load_instance(args.instance, args.r)
    nk = inst.necklace
    if nk.beads is not None and not nk.measures:
        nk = discrete_to_continuous(nk.beads, nk.thieves)
    r = nk.thieves
    prefs = PreferenceMatrix(tuple(_per_player(args.prefs, r, _preference)))
    config = _solver_config(args)
    if args.binary is not None:
        res = solve_envy_free_binary(nk, prefs, args.binary, config)
    elif args.equicardinal:
        res = solve_envy_free_equicardinal(nk, prefs, config)
    else:
        res = solve_envy_free(nk, prefs, config)
    result = {"r": r, "n": nk.n, "search": res.status, "facets_tried": res.facets_tried, "notes": list(res.notes)}
    verdicts = {}
    if res.pa is not None:
        result.update(cuts=list(res.pa.cuts), allocation=list(res.pa.allocation),
                      residual=res.residual, delta=res.delta)
    if res.ok:
        result["permutation"] = list(res.permutation)
        # recomputed from raw oracles and measures, not from the search's scores
        share_dev = float(np.max(np.abs(shares_float(nk, res.pa) - 1.0 / r))) if nk.n else 0.0
        raw = prefs.margins(family_of(res.pa, r))
        margins = [float(raw[j, res.permutation[j]]) for j in range(r)]
        result["margins"] = margins
        verdicts["fair"] = share_dev <= args.eps
        verdicts["preferred"] = min(margins) >= -res.delta
    code = EXIT_OK if res.ok else EXIT_UNKNOWN
    if not all(verdicts.values()):
        code = EXIT_FAIL
    return RunReport([], res.status, inst.digest(), args.seed, result, verdicts), code


def _interval(iv) -> str:
    return f"[{iv[0]:.12g},{iv[1]:.12g}]"


def cmd_ak_demo(args) -> Tuple[RunReport, int]:
    r = args.r
    rng = random.Random(args.seed)
    specs = args.prefs or ["random"]
    if len(specs) == 1:
        specs = specs * r  # "random" then draws independently per player
    if len(specs) != r:
        raise UsageError(f"give one --prefs for all players or exactly r={r}, got {len(specs)}")
    prefs = [_partition_oracle(s, r, rng) for s in specs]
    res = ak.solve_ak(prefs, _solver_config(args))
    result = {"r": r, "players": [p.name for p in prefs], "search": res.envy_free.status}
    verdicts = {}
    if res.ok:
        result.update(intervals=[_interval(iv) for iv in res.intervals],
                      assignment=["-" if a is None else _interval(a) for a in res.assignment])
        margins = [ak.share_margin(o, res.intervals, a) for o, a in zip(prefs, res.assignment)]
        result["margins"] = margins
        verdicts["preferred"] = min(margins) >= -args.margin_tol
    if args.fuzz:
        verdicts["well_defined"] = not ak.well_definedness_violations(prefs, args.fuzz, args.seed)
    code = EXIT_OK if res.ok else EXIT_UNKNOWN
    if not all(verdicts.values()):
        code = EXIT_FAIL
    return RunReport([], res.status, None, args.seed, result, verdicts), code


def _profile_table(prof) -> List[str]:
    rows = ["dim  faces  rank  betti"]
    for d, (f, b) in enumerate(zip(prof.face_counts, prof.reduced_betti)):
        rows.append(f"{d:>3}  {f:>5}  {prof.ranks[d]:>4}  {b:>5}")
    return rows


def cmd_verify_connectivity(args) -> Tuple[RunReport, int]:
    if args.gen:
        parts = args.gen.split()
        K = generate(parts[0], *parts[1:])
    else:
        K = loads_complex(_read_text(args.complex))
    cert = connectivity_certificate(K, args.claim, args.p)
    prof = cert.profile
    # independent re-check of the verdict from the raw Betti numbers
    recheck = (args.claim < 0 or cert.path_connected) and not any(prof.reduced_betti[: args.claim + 1])
    if recheck != cert.passed:
        raise AssertionError("connectivity verdict disagrees with its Betti numbers")
    result = {
        "claim": args.claim,
        "p": args.p,
        "f_vector": prof.face_counts,
        "reduced_betti": prof.reduced_betti,
        "connectivity": prof.connectivity,
        "path_connected": cert.path_connected,
        "reason": cert.reason,
        "scope": cert.scope,
        "table": _profile_table(prof),
    }
    status = "pass" if cert.passed else "fail"
    return RunReport([], status, None, None, result, {"claim": cert.passed}), EXIT_OK if cert.passed else EXIT_FAIL


def cmd_check_unavoidable(args) -> Tuple[RunReport, int]:
    r, n = args.r, args.n
    family = _load_family(args.family, r, n)
    m = args.m if args.m is not None else (r - 1) * (n + 1) + 1
    witness = collective_unavoidability_witness(family, m)
    verdict = witness is None
    result = {"r": r, "n": n, "m": m, "unavoidable": verdict}
    if witness is not None:
        result["witness"] = [sorted(w) for w in witness]
    verdicts = {"unavoidable": verdict}
    if args.family == "thm32":
        k, s = ks_parameters(r, n)
        caps = [k + 1] * s + [k] * (r - s)
        result["pigeonhole"] = pigeonhole_unavoidable(caps, m)
        verdicts["pigeonhole_agrees"] = result["pigeonhole"] == verdict
    status = "true" if verdict else "false"
    code = EXIT_OK if all(verdicts.values()) else EXIT_FAIL
    return RunReport([], status, None, None, result, verdicts), code


def _random_beads(r: int, n: int, per_type: int, rng: random.Random) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    beads = [letters[t] for t in range(n) for _ in range(per_type * r)]
    rng.shuffle(beads)
    return "".join(beads)


def _random_measure(rng: random.Random, pieces: int = 4) -> Measure:
    bps = sorted({Fraction(rng.randint(1, 15), 16) for _ in range(pieces - 1)})
    bps = [Fraction(0)] + bps + [Fraction(1)]
    w = [Fraction(rng.randint(0, 4)) for _ in range(len(bps) - 1)]
    if not any(w):
        w[0] = Fraction(1)
    total = sum(wi * (b - a) for wi, a, b in zip(w, bps, bps[1:]))
    return Measure(tuple(bps), tuple(wi / total for wi in w))


def cmd_gen(args) -> Tuple[str, int]:
    kind, rest = args.kind, args.args
    rng = random.Random(args.seed)
    if kind == "beads":
        r, n, per_type = (int(x) for x in rest)
        nk = Necklace((), BeadString.parse(_random_beads(r, n, per_type, rng)), r)
        return io.Instance(nk).dumps(), EXIT_OK
    if kind == "measures":
        r, n = (int(x) for x in rest)
        nk = Necklace(tuple(_random_measure(rng) for _ in range(n)), None, r)
        return io.Instance(nk).dumps(), EXIT_OK
    return dumps_complex(generate(kind, *rest)), EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which means "unknown" here
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="necklace", description="Constrained necklace splitting toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable report")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("split", help="exact discrete splitting")
    sp.add_argument("instance", help="instance file, '-' for stdin, or beads:STRING")
    sp.add_argument("--r", type=int)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--equicardinal", action="store_true")
    g.add_argument("--graph", help="cube:d, complete:r, cycle:r, path:r or edges:r:0-1,...")
    g.add_argument("--family", help="thm32 or a file of complexes separated by '---'")
    sp.add_argument("--lenient", action="store_true", help="run despite failed family preconditions")
    sp.add_argument("--max-cuts", type=int)
    sp.add_argument("--node-limit", type=int, default=5_000_000)
    sp.add_argument("--time-limit", type=float, default=60.0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--oracle", action="store_true", help="cross-check with brute-force enumeration")
    common(sp)
    sp.set_defaults(fn=cmd_split)

    def solver_flags(sp, restarts):
        sp.add_argument("--eps", type=float, default=1e-6)
        sp.add_argument("--grid", type=int, default=64)
        sp.add_argument("--restarts", type=int, default=restarts)
        sp.add_argument("--time-limit", type=float, default=120.0)

    sp = sub.add_parser("envy-free", help="envy-free splitting by test-map search")
    sp.add_argument("instance")
    sp.add_argument("--r", type=int)
    sp.add_argument("--prefs", action="append", required=True,
                    help="measure:BPS;DENS, fewest:q, contains:t, length:L or longest; once or per player")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--equicardinal", action="store_true")
    g.add_argument("--binary", type=int, metavar="D")
    solver_flags(sp, 8)
    common(sp)
    sp.set_defaults(fn=cmd_envy_free)

    sp = sub.add_parser("ak-demo", help="envy-free division with empty shares")
    sp.add_argument("--r", type=int, default=3)
    sp.add_argument("--prefs", action="append",
                    help="longest, contains:t, contains-empty:t, threshold:L, any, signed:BPS;DENS, random")
    sp.add_argument("--margin-tol", type=float, default=1e-4)
    sp.add_argument("--fuzz", type=int, default=0, help="well-definedness pairs to sample")
    solver_flags(sp, 8)
    common(sp)
    sp.set_defaults(fn=cmd_ak_demo)

    sp = sub.add_parser("verify-connectivity", help="homological connectivity certificate")
    sp.add_argument("complex", nargs="?", default="-", help="complex file (default stdin)")
    sp.add_argument("--gen", help="generator spec instead of a file, e.g. 'chessboard 3 2'")
    sp.add_argument("--claim", type=int, required=True)
    sp.add_argument("--p", type=int, default=2)
    common(sp)
    sp.set_defaults(fn=cmd_verify_connectivity)

    sp = sub.add_parser("check-unavoidable", help="collective unavoidability of a family")
    sp.add_argument("--family", default="thm32")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    common(sp)
    sp.set_defaults(fn=cmd_check_unavoidable)

    sp = sub.add_parser("gen", help="generate complexes or instances")
    sp.add_argument("kind", help="chessboard, skeleton, kgm, thm32, primary, beads, measures")
    sp.add_argument("args", nargs="*")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_gen)
    return p


def run(argv: Sequence[str]) -> Tuple[Optional[RunReport], int, str]:
    """Parse and execute; returns (report or None, exit code, text to print)."""
    argv = list(argv)
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    if args.command == "gen":
        text, code = cmd_gen(args)
        return None, code, text
    report, code = args.fn(args)
    report.command = argv
    report.wall_time = time.perf_counter() - t0
    return report, code, report.to_json() + "\n" if args.json else report.to_text()


_ERRORS = (UsageError, io.InstanceParseError, ComplexParseError, ValidationError, PreconditionError,
           limits.CapacityError, ValueError, OSError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    t0 = time.perf_counter()
    try:
        _, code, text = run(argv)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(text)
    sys.stdout.flush()
    print(f"wall time: {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
