"""Envy-free division where players may prefer an empty piece.

Players state preferences on the cut simplex: a point y is a sorted vector
of r - 1 cuts, and a partition oracle returns r margins. With t
non-degenerate intervals in y, index i < t means "the i-th interval from the
left" and every index i >= t means "an empty piece". Oracles must be
partition balanced (depend only on the non-degenerate intervals).

The reduction turns such preferences into preferences on the chessboard
configuration space (2r - 1 pieces, at most one non-degenerate piece per
safe), where the equicardinal envy-free solver applies.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..core import Necklace, PartitionAllocation, PiecewiseConstant
from .preferences import Family, PreferenceMatrix, PreferenceOracle, family_of
from .solver import (EnvyFreeResult, SolverConfig, birkhoff_permutation, preference_scores,
                     solve_envy_free_equicardinal)

Cuts = Tuple[float, ...]


class PartitionBalanceError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}; witness {witness}")
        self.witness = witness


def nondegenerate_intervals(y: Sequence[float]) -> List[Tuple[float, float]]:
    ends = [0.0] + sorted(float(c) for c in y) + [1.0]
    return [(a, b) for a, b in zip(ends, ends[1:]) if a != b]


def partition_equivalent(x: Sequence[float], x2: Sequence[float]) -> bool:
    """Same non-degenerate partition: equal cut sets once 0 and 1 are removed."""
    if len(x) != len(x2):
        raise ValueError("cut vectors must have the same length")
    return {c for c in x if 0 < c < 1} == {c for c in x2 if 0 < c < 1}


@dataclass(frozen=True)
class PartitionOracle:
    """One player's preference on the cut simplex; margins_fn(y) gives r margins."""

    margins_fn: Callable[[Cuts], Sequence[float]]
    r: int
    name: str = "custom"

    def margins(self, y: Sequence[float]) -> np.ndarray:
        m = np.asarray(self.margins_fn(tuple(float(c) for c in y)), dtype=float)
        if m.shape != (self.r,):
            raise ValueError(f"oracle {self.name} returned {m.shape}, expected ({self.r},)")
        return m

    def preferred(self, y: Sequence[float]) -> FrozenSet[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.margins(y) >= 0))

    def __contains__(self, item) -> bool:
        y, i = item
        return self.margins(y)[i] >= 0


# ---------------------------------------------------------------- built-ins

def _lengths(y, r):
    L = [b - a for a, b in nondegenerate_intervals(y)]
    return L + [0.0] * (r - len(L))


def _argmax_margins(vals):
    return [v - max(w for k, w in enumerate(vals) if k != i) for i, v in enumerate(vals)]


def longest_piece(r: int) -> PartitionOracle:
    return PartitionOracle(lambda y: _argmax_margins(_lengths(y, r)), r, "longest")


def contains_point(t: float, r: int, or_empty: bool = False) -> PartitionOracle:
    """Prefer the interval containing t; with or_empty also any empty piece."""

    def margins(y):
        iv = nondegenerate_intervals(y)
        out = [-(0.0 if a <= t <= b else min(abs(t - a), abs(t - b))) for a, b in iv]
        return out + [0.0 if or_empty else -1.0] * (r - len(iv))

    return PartitionOracle(margins, r, f"contains({t}{',empty' if or_empty else ''})")


def threshold_or_empty(length: float, r: int) -> PartitionOracle:
    """Prefer intervals of length >= length, or an empty piece when none
    qualifies; with r intervals (no empty piece available) the longest
    interval is also preferred so the oracle stays proper."""

    def margins(y):
        L = _lengths(y, r)
        t = len(nondegenerate_intervals(y))
        longest = max(L[:t])
        out = []
        for i in range(r):
            if i < t:
                m = L[i] - length
                if t == r:
                    m = max(m, L[i] - max(v for k, v in enumerate(L) if k != i))
                out.append(m)
            else:
                out.append(length - longest)
        return out

    return PartitionOracle(margins, r, f"threshold_or_empty({length})")


def any_nonempty(r: int) -> PartitionOracle:
    """"Any non-empty piece", taken as a closed set. Index i is a non-empty
    interval on a dense subset of the cut simplex, so its closure is the
    whole simplex: the player accepts every share, including an empty one."""
    return PartitionOracle(lambda y: [0.0] * r, r, "any_nonempty")


def signed_measure(nu: PiecewiseConstant, r: int) -> PartitionOracle:
    """Prefer the pieces of largest nu-value; an empty piece is worth 0."""

    def margins(y):
        vals = [float(nu.mass(a, b)) for a, b in nondegenerate_intervals(y)]
        return _argmax_margins(vals + [0.0] * (r - len(vals)))

    return PartitionOracle(margins, r, "signed_measure")


def random_builtin(r: int, rng: random.Random) -> PartitionOracle:
    kind = rng.choice(["longest", "contains", "contains_empty", "threshold", "any", "signed"])
    if kind == "longest":
        return longest_piece(r)
    if kind == "contains":
        return contains_point(round(rng.uniform(0.05, 0.95), 3), r)
    if kind == "contains_empty":
        return contains_point(round(rng.uniform(0.05, 0.95), 3), r, or_empty=True)
    if kind == "threshold":
        return threshold_or_empty(round(rng.uniform(0.1, 0.9), 3), r)
    if kind == "any":
        return any_nonempty(r)
    bps = sorted({round(rng.uniform(0.05, 0.95), 2) for _ in range(3)})
    from fractions import Fraction

    br = (Fraction(0),) + tuple(Fraction(str(b)) for b in bps) + (Fraction(1),)
    dens = tuple(Fraction(rng.randint(-5, 5)) for _ in range(len(br) - 1))
    return signed_measure(PiecewiseConstant(br, dens), r)


# ---------------------------------------------------------------- balance checks

def random_equivalent_pair(r: int, rng: random.Random) -> Tuple[Cuts, Cuts]:
    """Two partition-equivalent points of the cut simplex, built by adding
    repeated cuts and boundary cuts to a common partition."""
    t = rng.randint(1, r)
    inner = sorted(rng.sample(range(1, 1000), t - 1))
    inner = [c / 1000 for c in inner]

    def pad():
        extra = [rng.choice([0.0, 1.0] + inner) for _ in range(r - t)]
        return tuple(sorted(inner + extra))

    return pad(), pad()


def is_partition_balanced(X: Callable[[Cuts], bool], r: int, samples: int = 1000, seed: int = 0):
    """Sampled check; returns (True, None) or (False, witness_pair)."""
    rng = random.Random(seed)
    for _ in range(samples):
        y, y2 = random_equivalent_pair(r, rng)
        if bool(X(y)) != bool(X(y2)):
            return False, (y, y2)
    return True, None


# ---------------------------------------------------------------- reduction

def _representative(intervals: List[Tuple[float, float]], r: int, mode: str, rng: Optional[random.Random]) -> Cuts:
    """Step (1): a point of the cut simplex with the given non-degenerate
    intervals; the r - 1 - (t - 1) superfluous cuts are placed per mode."""
    inner = [b for a, b in intervals[:-1]]
    k = r - 1 - len(inner)
    if mode == "zeros":
        extra = [0.0] * k
    elif mode == "ones":
        extra = [1.0] * k
    elif mode == "repeat":
        extra = [(inner or [0.0])[-1]] * k
    else:
        extra = [rng.choice([0.0, 1.0] + inner) for _ in range(k)]
    return tuple(sorted(inner + extra))


def _vanishing_margin(oracle: PartitionOracle, intervals: List[Tuple[float, float]], r: int,
                      eta: float = 1e-9) -> float:
    """Best margin of a vanishing interval inserted at a cut point (or 0, 1).

    A non-degenerate interval that shrinks away inside an otherwise fixed
    family ends at a cut point of the limit, so these insertions describe
    the closure of the preference at families with an empty safe.
    """
    best = -np.inf
    for k, (a, b) in enumerate(intervals):
        for new, idx in (([(a, a + eta), (a + eta, b)], k), ([(a, b - eta), (b - eta, b)], k + 1)):
            if b - a <= 2 * eta:
                continue
            ivs = intervals[:k] + new + intervals[k + 1:]
            best = max(best, float(oracle.margins(_representative(ivs, r, "zeros", None))[idx]))
    return best


def preferred_safes(oracle: PartitionOracle, family: Family, r: int, mode: str = "zeros",
                    rng: Optional[random.Random] = None, check: bool = True,
                    closure: bool = False) -> Tuple[FrozenSet[int], np.ndarray]:
    """Steps (2) and (3) for one player: preferred safes and per-safe margins.

    With ``closure`` an empty safe also scores the best vanishing interval
    it could receive, which makes the margins continuous where a piece
    collapses.
    """
    owner = {}
    for safe, ivs in enumerate(family):
        for iv in ivs:
            owner[iv] = safe
    intervals = sorted(owner)
    t = len(intervals)
    if t > r:
        raise ValueError(f"{t} non-degenerate intervals for {r} players")
    y = _representative(intervals, r, mode, rng)
    m = oracle.margins(y)
    if check:
        y2 = _representative(intervals, r, "ones" if mode != "ones" else "zeros", rng)
        m2 = oracle.margins(y2)
        if (m >= 0).tolist() != (m2 >= 0).tolist():
            raise PartitionBalanceError(f"oracle {oracle.name} is not partition balanced", (y, y2))
    safe_margin = np.full(r, -np.inf)
    for i, iv in enumerate(intervals):
        s = owner[iv]
        safe_margin[s] = max(safe_margin[s], m[i])
    if t < r:
        empty_margin = float(np.max(m[t:]))
        if closure and t:
            empty_margin = max(empty_margin, _vanishing_margin(oracle, intervals, r))
        for s in range(r):
            if not family[s]:
                safe_margin[s] = max(safe_margin[s], empty_margin)
    return frozenset(int(s) for s in np.flatnonzero(safe_margin >= 0)), safe_margin


def ak_reduce(prefs: Sequence[PartitionOracle], check: bool = True) -> PreferenceMatrix:
    """Preferences on the chessboard configuration space induced by
    partition-balanced preferences on the cut simplex."""
    r = len(prefs)
    if any(p.r != r for p in prefs):
        raise ValueError("every partition oracle must have r entries")

    def row(o: PartitionOracle) -> PreferenceOracle:
        def margins(family):
            sm = preferred_safes(o, family, r, check=check, closure=True)[1]
            return np.maximum(sm, -1e9)  # an empty or foreign safe is far outside

        return PreferenceOracle(lambda fam, i: margins(fam)[i], f"ak({o.name})", margins)

    return PreferenceMatrix(tuple(row(o) for o in prefs))


def random_class_representatives(r: int, rng: random.Random) -> Tuple[PartitionAllocation, PartitionAllocation]:
    """Two points of the chessboard configuration space (2r - 1 pieces, at most
    one non-degenerate piece per safe) in the same class: same non-degenerate
    pieces and owners, different degenerate pieces."""
    t = rng.randint(1, r)
    inner = sorted(c / 1000 for c in rng.sample(range(1, 1000), t - 1))
    owners = rng.sample(range(r), t)

    def rep():
        slots = sorted(rng.sample(range(2 * r - 1), t))
        cuts, alloc = [], []
        pos, j = 0.0, 0
        ends = inner + [1.0]
        for k in range(2 * r - 1):
            if j < t and k == slots[j]:
                alloc.append(owners[j])
                pos = ends[j]
                j += 1
            else:
                alloc.append(rng.randrange(r))
            cuts.append(pos)
        return PartitionAllocation(tuple(cuts[:-1]), tuple(alloc))

    return rep(), rep()


def well_definedness_violations(prefs: Sequence[PartitionOracle], pairs: int = 1000, seed: int = 0) -> List[tuple]:
    """Fuzz: preferred safes agree across equivalent representatives and
    across choices of superfluous-cut elimination."""
    r = len(prefs)
    rng = random.Random(seed)
    bad = []
    for _ in range(pairs):
        a, b = random_class_representatives(r, rng)
        fa, fb = family_of(a, r), family_of(b, r)
        for j, o in enumerate(prefs):
            sa = preferred_safes(o, fa, r, "random", rng, check=False)[0]
            sb = preferred_safes(o, fb, r, "random", rng, check=False)[0]
            if sa != sb:
                bad.append((j, a, b, sa, sb))
    return bad


# ---------------------------------------------------------------- solver

@dataclass
class AKResult:
    status: str
    intervals: List[Tuple[float, float]]
    assignment: List[Optional[Tuple[float, float]]]  # player j -> interval or None (empty piece)
    margins: List[float]  # raw oracle margin of each player's share
    envy_free: EnvyFreeResult

    @property
    def ok(self) -> bool:
        return self.status == "solved"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "intervals": [list(iv) for iv in self.intervals],
            "assignment": [None if a is None else list(a) for a in self.assignment],
            "margins": self.margins,
            "delta": self.envy_free.delta,
        }


def share_margin(oracle: PartitionOracle, intervals: List[Tuple[float, float]], share) -> float:
    """Raw margin of a share (interval or None) under a partition oracle."""
    r = oracle.r
    y = _representative(intervals, r, "zeros", None)
    m = oracle.margins(y)
    if share is None:
        t = len(intervals)
        return float(np.max(m[t:])) if t < r else -np.inf
    return float(m[intervals.index(share)])


def solve_ak(prefs: Sequence[PartitionOracle], config: SolverConfig = SolverConfig()) -> AKResult:
    r = len(prefs)
    matrix = ak_reduce(prefs)
    res = solve_envy_free_equicardinal(Necklace((), thieves=r), matrix, config)
    if not res.ok:
        return AKResult("unknown", [], [], [], res)
    family = family_of(res.pa, r)
    intervals = sorted(iv for safe in family for iv in safe)
    shares = [safe[0] if safe else None for safe in family]
    raw = np.array([[share_margin(o, intervals, sh) for sh in shares] for o in prefs])
    # the search matched players on closed-up margins; rematch on raw ones
    S = preference_scores(matrix, res.delta)(res.pa).values
    pi = birkhoff_permutation(S, tol=min(config.epsilon, 1e-9), sum_tol=r * config.epsilon + 1e-12,
                              prefer=np.maximum(raw, -1e9))
    assignment = [shares[pi[j]] for j in range(r)]
    margins = [float(raw[j, pi[j]]) for j in range(r)]
    status = "solved" if min(margins) >= -config.margin_tol else "unknown"
    return AKResult(status, intervals, assignment, margins, res)
