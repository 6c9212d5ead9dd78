"""Player preferences over admissible families.

An admissible family is a tuple with one entry per safe, each entry the
tuple of non-degenerate intervals ``(a, b)`` in that safe. A preference
oracle scores every safe with a margin; the safe is preferred iff its
margin is non-negative. Margins let the solver thicken closed preference
sets into open ones.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..core import PartitionAllocation, PiecewiseConstant

Interval = Tuple[float, float]
Family = Tuple[Tuple[Interval, ...], ...]


class ImproperPreferenceError(ValueError):
    """A player prefers no safe at some configuration point."""

    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}; witness {witness}")
        self.witness = witness


def family_of(pa: PartitionAllocation, r: int) -> Family:
    """The admissible family seen by the players: degenerate pieces are dropped."""
    safes: List[List[Interval]] = [[] for _ in range(r)]
    for k, (a, b) in enumerate(pa.pieces()):
        if a != b:
            safes[pa.allocation[k]].append((a, b))
    return tuple(tuple(s) for s in safes)


def permute_family(family: Family, sigma: Sequence[int]) -> Family:
    """The family (U_sigma(0), ..., U_sigma(r-1))."""
    return tuple(family[sigma[i]] for i in range(len(family)))


@dataclass(frozen=True)
class PreferenceOracle:
    """One player's preference. ``margin_fn(family, i)`` is non-negative
    exactly when safe i is preferred."""

    margin_fn: Callable[[Family, int], float]
    name: str = "custom"
    margins_fn: Optional[Callable[[Family], Sequence[float]]] = None  # all safes at once, if cheaper

    def margin(self, family: Family, i: int) -> float:
        return float(self.margin_fn(family, i))

    def margins(self, family: Family) -> np.ndarray:
        if self.margins_fn is not None:
            return np.asarray(self.margins_fn(family), dtype=float)
        return np.array([self.margin(family, i) for i in range(len(family))])

    def preferred(self, family: Family) -> FrozenSet[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.margins(family) >= 0))

    def __contains__(self, item) -> bool:
        family, i = item
        return self.margin(family, i) >= 0

    @classmethod
    def from_predicate(cls, pred: Callable[[Family, int], bool], name: str = "predicate") -> "PreferenceOracle":
        """Membership-only oracle; its margin is a step (0 inside, -1 outside)."""
        return cls(lambda fam, i: 0.0 if pred(fam, i) else -1.0, name)


def _total_length(safe) -> float:
    return sum(b - a for a, b in safe)


def _argmax_margins(vals: Sequence) -> List:
    out = []
    for i, v in enumerate(vals):
        out.append(v - max(w for k, w in enumerate(vals) if k != i))
    return out


def measure_preference(nu: PiecewiseConstant) -> PreferenceOracle:
    """Prefer the safes of largest nu-value (ties give several). nu may be signed."""

    def values(family):
        flat = [e for safe in family for ab in safe for e in ab]
        if flat and all(isinstance(e, float) for e in flat):
            cdf = nu.cdf_array(np.array(flat))
            masses = cdf[1::2] - cdf[0::2]
            out, k = [], 0
            for safe in family:
                out.append(float(masses[k:k + len(safe)].sum()))
                k += len(safe)
            return out
        return [sum((nu.mass(a, b) for a, b in safe), 0) for safe in family]

    return PreferenceOracle(lambda fam, i: _argmax_margins(values(fam))[i], "measure",
                            lambda fam: _argmax_margins(values(fam)))


def fewest_pieces_preference(q: int) -> PreferenceOracle:
    """Prefer safes holding at most q non-degenerate pieces."""
    if q < 1:
        raise ValueError("q must be at least 1")
    return PreferenceOracle(lambda fam, i: q - len(fam[i]), f"fewest_pieces({q})")


def contains_point_preference(t: float) -> PreferenceOracle:
    """Prefer the safe(s) whose share contains the point t."""

    def dist(safe):
        if not safe:
            return float("inf")
        return min(0.0 if a <= t <= b else min(abs(t - a), abs(t - b)) for a, b in safe)

    return PreferenceOracle(lambda fam, i: -dist(fam[i]), f"contains({t})")


def length_threshold_preference(length: float) -> PreferenceOracle:
    """Prefer safes of total length >= length; the longest safe always qualifies."""

    def margins(family):
        lens = [_total_length(s) for s in family]
        return [max(l - length, d) for l, d in zip(lens, _argmax_margins(lens))]

    return PreferenceOracle(lambda fam, i: margins(fam)[i], f"length>={length}", margins)


def longest_preference() -> PreferenceOracle:
    return length_threshold_preference(float("inf"))


@dataclass(frozen=True)
class PreferenceMatrix:
    """Row j is player j's preference oracle."""

    oracles: Tuple[PreferenceOracle, ...]

    def __post_init__(self):
        object.__setattr__(self, "oracles", tuple(self.oracles))
        if not self.oracles:
            raise ValueError("need at least one player")

    @property
    def r(self) -> int:
        return len(self.oracles)

    @classmethod
    def identical(cls, oracle: PreferenceOracle, r: int) -> "PreferenceMatrix":
        return cls((oracle,) * r)

    def margins(self, family: Family) -> np.ndarray:
        """r x r array, entry [j, i] = player j's margin for safe i."""
        cache = {}  # players sharing one oracle object are evaluated once
        rows = []
        for o in self.oracles:
            if id(o) not in cache:
                cache[id(o)] = o.margins(family)
            rows.append(cache[id(o)])
        return np.array(rows)


# ---------------------------------------------------------------- sampling

def random_point(r: int, m: int, rng: random.Random, degenerate_rate: float = 0.2,
                 allowed: Optional[Callable[[PartitionAllocation], bool]] = None,
                 tries: int = 1000) -> PartitionAllocation:
    """Random configuration point on m pieces; some cuts coincide or touch the ends."""
    for _ in range(tries):
        cuts = sorted(rng.random() for _ in range(m - 1))
        for k in range(m - 1):
            if rng.random() < degenerate_rate:
                cuts[k] = rng.choice([0.0, 1.0, cuts[k - 1] if k else 0.0])
        cuts.sort()
        pa = PartitionAllocation(tuple(cuts), tuple(rng.randrange(r) for _ in range(m)))
        if allowed is None or allowed(pa):
            return pa
    raise RuntimeError("could not sample an allowed configuration point")


def check_proper(prefs: PreferenceMatrix, m: int, samples: int = 200, seed: int = 0,
                 allowed=None) -> Optional[tuple]:
    """Sampled properness check; returns (player, point) on the first failure."""
    rng = random.Random(seed)
    for _ in range(samples):
        pa = random_point(prefs.r, m, rng, allowed=allowed)
        fam = family_of(pa, prefs.r)
        for j, o in enumerate(prefs.oracles):
            if not o.preferred(fam):
                return j, pa
    return None


def check_equivariant(prefs: PreferenceMatrix, m: int, samples: int = 200, seed: int = 0,
                      allowed=None) -> Optional[tuple]:
    """Sampled equivariance check: i is preferred for U iff sigma^-1(i) is
    preferred for (U_sigma(0), ..., U_sigma(r-1)). Returns a witness or None."""
    rng = random.Random(seed)
    r = prefs.r
    for _ in range(samples):
        pa = random_point(r, m, rng, allowed=allowed)
        fam = family_of(pa, r)
        sigma = list(range(r))
        rng.shuffle(sigma)
        moved = permute_family(fam, sigma)
        for j, o in enumerate(prefs.oracles):
            left = o.preferred(fam)
            right = frozenset(sigma[i] for i in o.preferred(moved))
            if left != right:
                return j, pa, tuple(sigma)
    return None
