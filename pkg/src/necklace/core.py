"""Necklaces, partition/allocations and the fairness predicates shared by
every solver and checker.

Thieves and pieces are indexed from 0. All arithmetic here is exact
(:class:`fractions.Fraction`); float inputs are accepted where noted so the
continuous solvers can reuse the same share evaluation.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

Real = Fraction  # exact scalar used throughout the core


class ValidationError(ValueError):
    """Raised for malformed measures, bead strings or partition/allocations."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value)) if isinstance(value, str) else Fraction(value)


@dataclass(frozen=True)
class PiecewiseConstant:
    """A density on [0, 1] that is constant between consecutive breakpoints.

    Densities may be negative; :class:`Measure` adds the probability
    constraints.
    """

    breakpoints: Tuple[Fraction, ...]
    densities: Tuple[Fraction, ...]

    def __post_init__(self):
        bps = tuple(as_fraction(b) for b in self.breakpoints)
        dens = tuple(as_fraction(d) for d in self.densities)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "densities", dens)
        if len(bps) < 2 or bps[0] != 0 or bps[-1] != 1:
            raise ValidationError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if len(dens) != len(bps) - 1:
            raise ValidationError(
                f"need {len(bps) - 1} densities for {len(bps)} breakpoints, got {len(dens)}"
            )

    @property
    def total(self) -> Fraction:
        return sum(
            (d * (b - a) for a, b, d in zip(self.breakpoints, self.breakpoints[1:], self.densities)),
            Fraction(0),
        )

    def cdf(self, t):
        """Mass of [0, t]. Exact for Fraction input, float for float input."""
        if isinstance(t, float):
            return float(np.interp(t, self._bp_float, self._cum_float))
        t = as_fraction(t)
        if t <= 0:
            return Fraction(0)
        acc = Fraction(0)
        for a, b, d in zip(self.breakpoints, self.breakpoints[1:], self.densities):
            if t <= a:
                break
            acc += d * (min(t, b) - a)
        return acc

    def mass(self, a, b):
        return self.cdf(b) - self.cdf(a)

    def cdf_array(self, ts: np.ndarray) -> np.ndarray:
        """Vectorised float CDF; the CDF is piecewise linear so interpolation is exact."""
        return np.interp(ts, self._bp_float, self._cum_float)

    @property
    def _bp_float(self) -> np.ndarray:
        cached = self.__dict__.get("_bpf")
        if cached is None:
            cached = np.array([float(b) for b in self.breakpoints])
            object.__setattr__(self, "_bpf", cached)
        return cached

    @property
    def _cum_float(self) -> np.ndarray:
        cached = self.__dict__.get("_cumf")
        if cached is None:
            cum = [Fraction(0)]
            for a, b, d in zip(self.breakpoints, self.breakpoints[1:], self.densities):
                cum.append(cum[-1] + d * (b - a))
            cached = np.array([float(c) for c in cum])
            object.__setattr__(self, "_cumf", cached)
        return cached


@dataclass(frozen=True)
class Measure(PiecewiseConstant):
    """Probability measure with a piecewise-constant density."""

    def __post_init__(self):
        super().__post_init__()
        if any(d < 0 for d in self.densities):
            raise ValidationError("densities must be non-negative")
        if self.total != 1:
            raise ValidationError(f"total mass must be 1, got {self.total}")

    @classmethod
    def uniform(cls, a=0, b=1) -> "Measure":
        """Uniform probability measure on [a, b]."""
        a, b = as_fraction(a), as_fraction(b)
        bps = [Fraction(0)]
        dens = []
        if a > 0:
            bps.append(a)
            dens.append(Fraction(0))
        bps.append(b)
        dens.append(1 / (b - a))
        if b < 1:
            bps.append(Fraction(1))
            dens.append(Fraction(0))
        return cls(tuple(bps), tuple(dens))


@dataclass(frozen=True)
class BeadString:
    beads: Tuple[str, ...]

    def __post_init__(self):
        beads = tuple(self.beads)
        if not beads:
            raise ValidationError("bead string must be nonempty")
        object.__setattr__(self, "beads", beads)

    @classmethod
    def parse(cls, text: str) -> "BeadString":
        return cls(tuple(text.strip()))

    def __len__(self) -> int:
        return len(self.beads)

    def __str__(self) -> str:
        return "".join(self.beads)

    @property
    def types(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.beads)))

    @property
    def multiplicities(self) -> dict:
        return dict(sorted(Counter(self.beads).items()))

    def check_divisible(self, r: int) -> None:
        bad = {t: c for t, c in self.multiplicities.items() if c % r}
        if bad:
            raise ValidationError(f"multiplicities not divisible by r={r}: {bad}")

    def type_index(self) -> Tuple[int, ...]:
        idx = {t: i for i, t in enumerate(self.types)}
        return tuple(idx[b] for b in self.beads)


@dataclass(frozen=True)
class Necklace:
    measures: Tuple[Measure, ...] = ()
    beads: Optional[BeadString] = None
    thieves: int = 2

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(self.measures))
        if self.thieves < 2:
            raise ValidationError("need at least two thieves")

    @property
    def n(self) -> int:
        return len(self.measures)


@dataclass(frozen=True)
class PartitionAllocation:
    """Cut vector plus allocation function on the m = len(cuts) + 1 pieces.

    Equality is up to reallocation of degenerate pieces.
    """

    cuts: Tuple
    allocation: Tuple[int, ...]

    def __post_init__(self):
        cuts = tuple(self.cuts)
        alloc = tuple(int(a) for a in self.allocation)
        object.__setattr__(self, "cuts", cuts)
        object.__setattr__(self, "allocation", alloc)
        if len(alloc) != len(cuts) + 1:
            raise ValidationError(
                f"allocation has {len(alloc)} entries, expected {len(cuts) + 1}"
            )
        if any(c < 0 or c > 1 for c in cuts):
            raise ValidationError("cuts must lie in [0, 1]")
        if any(a > b for a, b in zip(cuts, cuts[1:])):
            raise ValidationError("cuts must be non-decreasing")
        if any(a < 0 for a in alloc):
            raise ValidationError("allocation labels must be non-negative")

    @property
    def m(self) -> int:
        return len(self.allocation)

    @property
    def endpoints(self) -> tuple:
        zero = 0.0 if any(isinstance(c, float) for c in self.cuts) else Fraction(0)
        return (zero,) + self.cuts + (zero + 1,)

    def pieces(self):
        e = self.endpoints
        return [(e[k], e[k + 1]) for k in range(self.m)]

    @property
    def degenerate(self) -> frozenset:
        """Indices k with x_{k-1} == x_k."""
        e = self.endpoints
        return frozenset(k for k in range(self.m) if e[k] == e[k + 1])

    def owned(self, thief: int, nondegenerate: bool = False) -> Tuple[int, ...]:
        skip = self.degenerate if nondegenerate else frozenset()
        return tuple(k for k, a in enumerate(self.allocation) if a == thief and k not in skip)

    def check_thieves(self, r: int) -> None:
        if any(a >= r for a in self.allocation):
            raise ValidationError(f"allocation uses a thief label >= r={r}")

    def _key(self):
        deg = self.degenerate
        return self.cuts, tuple(None if k in deg else a for k, a in enumerate(self.allocation))

    def __eq__(self, other):
        if not isinstance(other, PartitionAllocation):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


def cardinality_profile(pa: PartitionAllocation, r: int) -> Tuple[int, ...]:
    """Non-degenerate piece count per thief."""
    deg = pa.degenerate
    counts = [0] * r
    for k, a in enumerate(pa.allocation):
        if k not in deg:
            counts[a] += 1
    return tuple(counts)


def evaluate_share(necklace: Necklace, pa: PartitionAllocation, thief: int) -> tuple:
    """Measure of thief's pieces under each necklace measure."""
    r = necklace.thieves
    if not 0 <= thief < r:
        raise ValidationError(f"thief {thief} out of range for r={r}")
    pa.check_thieves(r)
    pieces = pa.pieces()
    mine = [pieces[k] for k in pa.owned(thief)]
    out = []
    for mu in necklace.measures:
        total = sum((mu.mass(a, b) for a, b in mine), Fraction(0))
        out.append(total)
    return tuple(out)


def fairness_residual(necklace: Necklace, pa: PartitionAllocation) -> Fraction:
    r = necklace.thieves
    target = Fraction(1, r)
    worst = Fraction(0)
    for i in range(r):
        for share in evaluate_share(necklace, pa, i):
            worst = max(worst, abs(share - target))
    return worst


def ks_parameters(r: int, n: int) -> Tuple[int, int]:
    """(k, s) with k*r + s == (r-1)*n + 1 and 0 <= s < r."""
    if r < 2 or n < 1:
        raise ValueError("need r >= 2 and n >= 1")
    return divmod((r - 1) * n + 1, r)


def profile_is_ks(profile: Sequence[int], k: int, s: int) -> bool:
    return all(c <= k + 1 for c in profile) and sum(c == k + 1 for c in profile) <= s


def is_ks_equicardinal(pa: PartitionAllocation, k: int, s: int, r: Optional[int] = None) -> bool:
    if r is None:
        r = max(pa.allocation) + 1
    return profile_is_ks(cardinality_profile(pa, r), k, s)


def is_g_constraint(pa: PartitionAllocation, graph) -> bool:
    """Every consecutive pair of pieces, degenerate ones included, is a stay or an edge."""
    f = pa.allocation
    return all(a == b or graph.has_edge(a, b) for a, b in zip(f, f[1:]))


def discrete_to_continuous(beads: BeadString, thieves: int = 2) -> Necklace:
    """Bead i occupies the cell [i/L, (i+1)/L]; one uniform measure per bead type."""
    L = len(beads)
    measures = []
    for t in beads.types:
        cells = [i for i, b in enumerate(beads.beads) if b == t]
        weight = Fraction(L, len(cells))
        bps = [Fraction(0)]
        dens = []
        for i in range(L):
            d = weight if i in cells else Fraction(0)
            if dens and dens[-1] == d:
                bps[-1] = Fraction(i + 1, L)
            else:
                dens.append(d)
                bps.append(Fraction(i + 1, L))
        measures.append(Measure(tuple(bps), tuple(dens)))
    return Necklace(tuple(measures), beads, thieves)


def bead_counts(beads: BeadString, pa: PartitionAllocation, r: int) -> list:
    """counts[thief][type] for a partition/allocation whose cuts are bead boundaries."""
    L = len(beads)
    types = beads.type_index()
    n = len(beads.types)
    counts = [[0] * n for _ in range(r)]
    for (a, b), owner in zip(pa.pieces(), pa.allocation):
        lo, hi = a * L, b * L
        if lo != int(lo) or hi != int(hi):
            raise ValidationError("cuts are not at bead boundaries")
        for i in range(int(lo), int(hi)):
            counts[owner][types[i]] += 1
    return counts


def round_to_beads(beads: BeadString, pa: PartitionAllocation, r: int) -> PartitionAllocation:
    """Move every cut to a bead boundary while keeping the splitting exactly fair.

    Each bead cut by one or more cuts is handed whole to one of the thieves
    that held a positive fraction of it. The choice is an integral flow
    (beads -> thieves, thief capacity = its fractional bead total, an
    integer), which exists because the fractional split is itself a flow.
    """
    import networkx as nx

    necklace = discrete_to_continuous(beads, r)
    if fairness_residual(necklace, pa) != 0:
        raise ValidationError("round_to_beads needs an exactly fair splitting")
    L = len(beads)
    types = beads.type_index()
    scaled = [as_fraction(c) * L for c in pa.cuts]
    # cell -> list of (piece index, portion of the cell)
    split_cells: dict = {}
    ends = [Fraction(0)] + scaled + [Fraction(L)]
    for k in range(pa.m):
        a, b = ends[k], ends[k + 1]
        if a == b:
            continue
        first, last = int(a), -(-b.numerator // b.denominator)  # floor(a), ceil(b)
        for cell in range(first, last):
            lo, hi = max(a, cell), min(b, cell + 1)
            if lo < hi and (lo != cell or hi != cell + 1):
                split_cells.setdefault(cell, []).append((k, hi - lo))

    winner: dict = {}
    for t in range(len(beads.types)):
        cells = [c for c in split_cells if types[c] == t]
        if not cells:
            continue
        g = nx.DiGraph()
        frac_total = [Fraction(0)] * r
        for c in cells:
            g.add_edge("s", ("c", c), capacity=1)
            for k, portion in split_cells[c]:
                owner = pa.allocation[k]
                frac_total[owner] += portion
                g.add_edge(("c", c), ("t", owner), capacity=1)
        for i in range(r):
            if frac_total[i]:
                assert frac_total[i].denominator == 1
                g.add_edge(("t", i), "z", capacity=int(frac_total[i]))
        value, flow = nx.maximum_flow(g, "s", "z")
        if value != len(cells):
            raise AssertionError("integral bead assignment not found")
        for c in cells:
            owner = next(o for (_, o), v in flow[("c", c)].items() if v == 1)
            winner[c] = next(k for k, _ in split_cells[c] if pa.allocation[k] == owner)

    new = list(scaled)
    for cell, piece in winner.items():
        # cuts strictly inside the cell, plus those on its boundary adjacent to split pieces
        for idx, x in enumerate(scaled):
            if cell < x < cell + 1:
                # cut idx separates piece idx and idx+1
                new[idx] = Fraction(cell) if idx < piece else Fraction(cell + 1)
    out = PartitionAllocation(tuple(x / L for x in new), pa.allocation)
    if fairness_residual(necklace, out) != 0:
        raise AssertionError("rounding broke fairness")
    return out


@dataclass(frozen=True)
class SplitReport:
    pa: PartitionAllocation
    fairness_residual: Fraction
    cardinality_profile: Tuple[int, ...]
    constraint_flags: dict = field(default_factory=dict)
    notes: Tuple[str, ...] = ()

    @classmethod
    def build(cls, necklace: Necklace, pa: PartitionAllocation, flags: Optional[dict] = None,
              notes: Iterable[str] = ()) -> "SplitReport":
        return cls(
            pa,
            fairness_residual(necklace, pa),
            cardinality_profile(pa, necklace.thieves),
            dict(flags or {}),
            tuple(notes),
        )

    @property
    def effective_cuts(self) -> int:
        """Cuts between non-degenerate pieces held by different thieves."""
        deg = self.pa.degenerate
        owners = [a for k, a in enumerate(self.pa.allocation) if k not in deg]
        return sum(a != b for a, b in zip(owners, owners[1:]))
