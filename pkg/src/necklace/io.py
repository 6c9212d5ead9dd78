"""Line-oriented instance files.

Each non-blank line is one JSON object with a ``type`` field:

    {"type": "necklace", "r": 2, "measures": [{"breakpoints": ["0/1", "1/1"], "densities": ["1/1"]}], "beads": "aabb"}
    {"type": "allocation", "cuts": ["1/4", "3/4"], "f": [0, 1, 0]}

Rationals are written as "p/q" strings so that a round trip is exact.
Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .core import BeadString, Measure, Necklace, PartitionAllocation, PiecewiseConstant, ValidationError


class InstanceParseError(ValueError):
    """Malformed instance text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def format_rational(x) -> str:
    q = Fraction(x)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text, line: int = 1, column: int = 1) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise InstanceParseError(f"expected a rational string, got {text!r}", line, column)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceParseError(f"bad rational {text!r} ({exc})", line, column) from None


@dataclass
class Instance:
    necklace: Optional[Necklace] = None
    allocations: List[PartitionAllocation] = field(default_factory=list)

    def dumps(self) -> str:
        lines = []
        if self.necklace is not None:
            lines.append(dumps_necklace(self.necklace))
        lines.extend(dumps_allocation(pa) for pa in self.allocations)
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """sha256 of the canonical text, first 16 hex digits."""
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


def _measure_obj(mu: PiecewiseConstant) -> dict:
    return {
        "breakpoints": [format_rational(b) for b in mu.breakpoints],
        "densities": [format_rational(d) for d in mu.densities],
    }


def dumps_necklace(necklace: Necklace) -> str:
    obj = {"type": "necklace", "r": necklace.thieves, "measures": [_measure_obj(m) for m in necklace.measures]}
    if necklace.beads is not None:
        obj["beads"] = str(necklace.beads)
    return json.dumps(obj)


def dumps_allocation(pa: PartitionAllocation) -> str:
    return json.dumps({"type": "allocation", "cuts": [format_rational(c) for c in pa.cuts], "f": list(pa.allocation)})


def _column(raw: str, token) -> int:
    """Best-effort column of a JSON value inside its line."""
    needle = json.dumps(token)
    pos = raw.find(needle)
    return pos + 1 if pos >= 0 else 1


def _rationals(values, raw: str, line: int, what: str) -> List[Fraction]:
    if not isinstance(values, list):
        raise InstanceParseError(f"{what} must be a list", line, _column(raw, what))
    return [parse_rational(v, line, _column(raw, v)) for v in values]


def _parse_necklace(obj: dict, raw: str, line: int) -> Necklace:
    r = obj.get("r", 2)
    if not isinstance(r, int) or isinstance(r, bool):
        raise InstanceParseError("r must be an integer", line, _column(raw, "r"))
    measures = []
    for spec in obj.get("measures", []):
        if not isinstance(spec, dict):
            raise InstanceParseError("measure must be an object", line, _column(raw, "measures"))
        bps = _rationals(spec.get("breakpoints"), raw, line, "breakpoints")
        dens = _rationals(spec.get("densities"), raw, line, "densities")
        try:
            measures.append(Measure(tuple(bps), tuple(dens)))
        except ValidationError as exc:
            raise InstanceParseError(str(exc), line, _column(raw, "measures")) from None
    beads = obj.get("beads")
    try:
        return Necklace(tuple(measures), BeadString.parse(beads) if beads else None, r)
    except ValidationError as exc:
        raise InstanceParseError(str(exc), line, _column(raw, "r")) from None


def _parse_allocation(obj: dict, raw: str, line: int) -> PartitionAllocation:
    cuts = _rationals(obj.get("cuts"), raw, line, "cuts")
    f = obj.get("f")
    if not isinstance(f, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in f):
        raise InstanceParseError("f must be a list of integers", line, _column(raw, "f"))
    try:
        return PartitionAllocation(tuple(cuts), tuple(f))
    except ValidationError as exc:
        raise InstanceParseError(str(exc), line, _column(raw, "cuts")) from None


def loads_instance(text: str) -> Instance:
    inst = Instance()
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InstanceParseError(exc.msg, lineno, exc.colno) from None
        if not isinstance(obj, dict):
            raise InstanceParseError("expected a JSON object", lineno, len(raw) - len(raw.lstrip()) + 1)
        kind = obj.get("type")
        if kind == "necklace":
            if inst.necklace is not None:
                raise InstanceParseError("second necklace record", lineno, 1)
            inst.necklace = _parse_necklace(obj, raw, lineno)
        elif kind == "allocation":
            inst.allocations.append(_parse_allocation(obj, raw, lineno))
        else:
            raise InstanceParseError(f"unknown record type {kind!r}", lineno, _column(raw, kind))
    return inst


def beads_instance(beads: str, r: int) -> Instance:
    """Instance for an inline bead string: no measures, only beads."""
    return Instance(Necklace((), BeadString.parse(beads), r))
