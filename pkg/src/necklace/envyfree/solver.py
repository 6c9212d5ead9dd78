"""Residual search for envy-free fair splittings.

A configuration point is a partition/allocation (x, f). The test map pairs
the share deviations of every necklace measure with the deviation of the
averaged preference scores F from the uniform vector; its zeros are the
envy-free fair splittings. For a fixed allocation f the shares are
piecewise linear in the cuts, so the search fixes f (one facet of the
configuration space at a time) and runs bounded least squares from grid
seeds.
"""
from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .._matching import perfect_matching
from ..complexes import Graph
from ..core import Necklace, PartitionAllocation, cardinality_profile, fairness_residual, is_g_constraint
from .preferences import ImproperPreferenceError, PreferenceMatrix, family_of


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-6
    grid: int = 64
    restarts: int = 8  # seed passes over each tier of facets
    min_descents: int = 48  # per tier, so tiers with few facets still get enough seeds
    seed: int = 0
    enlargement: float = 1.0  # initial delta; large values keep the score block from going flat
    refinements: int = 14  # delta halvings after the first zero, warm-started
    margin_tol: float = 1e-4  # assigned safes must have raw margin >= -margin_tol
    stages: int = 3  # search stages, starting delta divided by 4 each stage
    max_facets: int = 5000
    time_limit: float = 120.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.enlargement <= 0 or self.margin_tol < 0:
            raise ValueError("epsilon and enlargement must be positive")
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


@dataclass
class ScoreMatrix:
    """values[j, i] = f_i^j, player j's score for safe i; rows sum to 1."""

    values: np.ndarray
    delta: float

    ROW_TOL = 1e-12

    @classmethod
    def from_margins(cls, margins: np.ndarray, delta: float, point=None) -> "ScoreMatrix":
        """Clipped ramp on the delta-thickened preferences, normalised per player.

        A safe gets score 1 when preferred, decays linearly to 0 at margin -delta,
        and has positive score only inside the open enlargement {margin > -delta}.
        """
        g = np.clip((margins + delta) / delta, 0.0, 1.0)
        sums = g.sum(axis=1)
        bad = np.flatnonzero(sums <= 0)
        if bad.size:
            raise ImproperPreferenceError(f"player {int(bad[0])} prefers no safe within delta={delta}", point)
        values = g / sums[:, None]
        out = cls(values, delta)
        out.check(margins)
        return out

    def check(self, margins: Optional[np.ndarray] = None) -> None:
        if np.any(np.abs(self.values.sum(axis=1) - 1) > self.ROW_TOL) or np.any(self.values < 0):
            raise AssertionError("scores are not a partition of unity")
        if margins is not None and np.any((self.values > 0) & (margins <= -self.delta)):
            raise AssertionError("score support leaves the enlarged preferences")

    @property
    def averaged(self) -> np.ndarray:
        """F_i = (1/r) sum_j f_i^j."""
        return self.values.mean(axis=0)


ScoreFn = Callable[[PartitionAllocation], ScoreMatrix]


def preference_scores(prefs: PreferenceMatrix, delta: float) -> ScoreFn:
    r = prefs.r

    def scores(pa: PartitionAllocation) -> ScoreMatrix:
        return ScoreMatrix.from_margins(prefs.margins(family_of(pa, r)), delta, pa)

    return scores


def shares_float(necklace: Necklace, pa: PartitionAllocation) -> np.ndarray:
    """n x r array of measure shares (float)."""
    r = necklace.thieves
    ends = np.array([float(e) for e in pa.endpoints])
    alloc = np.asarray(pa.allocation)
    out = np.zeros((necklace.n, r))
    for k, mu in enumerate(necklace.measures):
        masses = np.diff(mu.cdf_array(ends))
        out[k] = np.bincount(alloc, weights=masses, minlength=r)
    return out


def test_map_vector(pa: PartitionAllocation, necklace: Necklace, scores: ScoreFn) -> np.ndarray:
    r = necklace.thieves
    phi = shares_float(necklace, pa) - 1.0 / r
    F = scores(pa).averaged - 1.0 / r
    return np.concatenate([phi.ravel(), F])


def test_map(pa: PartitionAllocation, necklace: Necklace, scores: ScoreFn) -> float:
    """Max-norm of (shares - 1/r) over all measures and safes, joined with F - 1/r."""
    return float(np.max(np.abs(test_map_vector(pa, necklace, scores))))


test_map.__test__ = False  # keep pytest from collecting the name
test_map_vector.__test__ = False


class BirkhoffError(ValueError):
    def __init__(self, message: str, hall_set=None):
        super().__init__(message if hall_set is None else f"{message}; Hall violator rows {sorted(hall_set)}")
        self.hall_set = hall_set


def birkhoff_permutation(M, tol: float = 1e-9, sum_tol: Optional[float] = None,
                         prefer=None) -> Tuple[int, ...]:
    """A permutation pi with M[j, pi(j)] > tol, by matching on the thresholded support.

    With ``prefer`` (an r x r weight array) the permutation maximises
    min_j prefer[j, pi(j)] among those inside the support.
    """
    M = np.asarray(M, dtype=float)
    r = M.shape[0]
    if M.shape != (r, r):
        raise ValueError("matrix must be square")
    sum_tol = r * tol if sum_tol is None else sum_tol
    if (np.any(M < -tol) or np.any(np.abs(M.sum(axis=0) - 1) > sum_tol)
            or np.any(np.abs(M.sum(axis=1) - 1) > sum_tol)):
        raise ValueError("matrix is not doubly stochastic within tolerance")
    support = M > tol

    def match_above(theta):
        adj = [[i for i in range(r) if support[j, i] and (prefer is None or prefer[j, i] >= theta)]
               for j in range(r)]
        return perfect_matching(adj, r)

    match, hall = match_above(-np.inf)
    if match is None:
        raise BirkhoffError("no permutation inside the support", hall)
    if prefer is not None:
        prefer = np.asarray(prefer, dtype=float)
        levels = np.unique(prefer[support])
        lo, hi = 0, len(levels) - 1  # bottleneck: largest level that still admits a matching
        while lo < hi:
            mid = (lo + hi + 1) // 2
            m2, _ = match_above(levels[mid])
            if m2 is None:
                hi = mid - 1
            else:
                lo, match = mid, m2
        match = match_above(levels[lo])[0]
    pi = tuple(match)
    assert all(M[j, pi[j]] > tol for j in range(r))
    return pi


def snap(pa: PartitionAllocation, tol: float = 1e-9) -> PartitionAllocation:
    """Merge cuts closer than tol to each other or to the ends of [0, 1]."""
    cuts = []
    for c in pa.cuts:
        c = float(c)
        if c < tol:
            c = 0.0
        elif c > 1 - tol:
            c = 1.0
        elif cuts and c - cuts[-1] < tol:
            c = cuts[-1]
        cuts.append(c)
    return PartitionAllocation(tuple(cuts), pa.allocation)


# ---------------------------------------------------------------- facets

def restricted_growth_strings(m: int, r: int, alternating_only: bool = False) -> Iterator[Tuple[int, ...]]:
    """Allocations on m pieces up to relabelling the safes: alternating ones
    (no two consecutive pieces in one safe) first, then the rest.

    The alternating ones already cover every point: merge equal neighbours
    and park the spare cuts at 1 as zero-length pieces with alternating owners.
    """

    def gen(alternating: bool):
        seq = [0]

        def rec(top):
            if len(seq) == m:
                yield tuple(seq)
                return
            for a in range(min(top + 2, r)):
                if alternating and a == seq[-1]:
                    continue
                seq.append(a)
                yield from rec(max(top, a))
                seq.pop()

        yield from rec(0)

    yield from gen(True)
    if alternating_only:
        return
    for s in gen(False):
        if any(a == b for a, b in zip(s, s[1:])):
            yield s


def cube_walks(m: int, d: int, stays: bool = True) -> Iterator[Tuple[int, ...]]:
    """Stay-or-step walks of length m on the d-cube from vertex 0; walks
    without stays first. Those already cover every point (pad a merged walk
    with zero-length back-and-forth steps at 1), so ``stays`` is optional."""
    G = Graph.cube(d)
    nbrs = [G.neighbors(v) for v in range(G.n)]

    def gen(with_stays: bool):
        seq = [0]

        def rec():
            if len(seq) == m:
                yield tuple(seq)
                return
            for w in ([seq[-1]] if with_stays else []) + nbrs[seq[-1]]:
                seq.append(w)
                yield from rec()
                seq.pop()

        yield from rec()

    yield from gen(False)
    if not stays:
        return
    for s in gen(True):
        if any(a == b for a, b in zip(s, s[1:])):
            yield s


def profile_facets(m: int, r: int, k: int, s: int) -> Iterator[Tuple[int, ...]]:
    """Allocations on m = rk + s pieces where s safes get k + 1 pieces and the rest k."""
    for f in restricted_growth_strings(m, r):
        counts = sorted((f.count(i) for i in range(r)), reverse=True)
        if counts == [k + 1] * s + [k] * (r - s):
            yield f


# ---------------------------------------------------------------- search

@dataclass
class EnvyFreeResult:
    status: str  # "solved" or "unknown"
    pa: Optional[PartitionAllocation]
    permutation: Optional[Tuple[int, ...]]
    residual: float
    delta: float
    margins: Optional[np.ndarray] = None
    facets_tried: int = 0
    elapsed: float = 0.0
    notes: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "solved"

    def assigned_margins(self) -> List[float]:
        return [float(self.margins[j, self.permutation[j]]) for j in range(len(self.permutation))]

    def as_dict(self) -> dict:
        out = {
            "status": self.status,
            "residual": self.residual,
            "delta": self.delta,
            "facets_tried": self.facets_tried,
            "notes": list(self.notes),
        }
        if self.pa is not None:
            out["cuts"] = [float(c) for c in self.pa.cuts]
            out["allocation"] = list(self.pa.allocation)
        if self.permutation is not None:
            out["permutation"] = list(self.permutation)
            out["assigned_margins"] = self.assigned_margins()
        return out


def _point(x: np.ndarray, f: Sequence[int], tail: int = 0) -> PartitionAllocation:
    cuts = tuple(float(c) for c in np.sort(np.clip(x, 0.0, 1.0))) + (1.0,) * tail
    return PartitionAllocation(cuts, tuple(f) + (f[-1],) * tail)


class _Deadline(Exception):
    pass


def _descend(necklace, prefs, f, x0, delta, tail):
    scores = preference_scores(prefs, delta)
    r = necklace.thieves
    # F moves by about margin / (r delta) per unit of margin; rescaling that
    # block to share units keeps the zeros and stops the share block from
    # dominating the descent
    weight = np.concatenate([np.ones(necklace.n * r), np.full(r, r * delta)])

    def fun(x):
        try:
            return weight * test_map_vector(_point(x, f, tail), necklace, scores)
        except ImproperPreferenceError:
            return weight

    if len(x0) == 0:
        return x0
    res = least_squares(fun, x0, bounds=(0.0, 1.0), method="trf", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=20 * (len(x0) + 1), diff_step=1e-9)
    return res.x


def _residual(necklace, prefs, f, x, delta, tail) -> float:
    try:
        return test_map(_point(x, f, tail), necklace, preference_scores(prefs, delta))
    except ImproperPreferenceError:
        return np.inf


def _scan(necklace, prefs, f, x, delta, tail, Q, res, rng, rounds=2):
    """Move single cuts across a shifted grid and descend again while that helps.

    The residual is flat in a cut that lies outside the support of every
    measure the players react to, so local descent alone cannot bring cuts
    into a narrow support; a one-coordinate grid scan can. The random shift
    lets repeated scans cover windows narrower than the grid step.
    """
    for _ in range(rounds):
        grid = (np.arange(Q) + rng.random()) / Q
        best = (res, None)
        for k in range(len(x)):
            for g in grid:
                y = x.copy()
                y[k] = g
                v = _residual(necklace, prefs, f, y, delta, tail)
                if v < best[0] - 1e-12:
                    best = (v, y)
        if best[1] is None:
            break
        x = _descend(necklace, prefs, f, best[1], delta, tail)
        res = _residual(necklace, prefs, f, x, delta, tail)
    return x, res


def _validate(necklace, prefs, pa, delta, epsilon):
    """Independent re-check: residual, Birkhoff step, raw-oracle margins."""
    pa = snap(pa)
    scores = preference_scores(prefs, delta)
    try:
        S = scores(pa)
    except ImproperPreferenceError:
        return None
    residual = test_map(pa, necklace, scores)
    if residual > epsilon:
        return None
    margins = prefs.margins(family_of(pa, necklace.thieves))
    try:
        pi = birkhoff_permutation(S.values, tol=min(epsilon, 1e-9),
                                  sum_tol=necklace.thieves * epsilon + 1e-12, prefer=margins)
    except (BirkhoffError, ValueError):
        return None
    if any(margins[j, pi[j]] < -delta for j in range(len(pi))):
        return None
    if necklace.n and float(fairness_residual(necklace, pa)) > epsilon:
        return None
    return pa, residual, pi, margins


def _seeds(N: int, config: SolverConfig, rng: random.Random,
           necklace: Optional[Necklace] = None) -> Iterator[np.ndarray]:
    """Equal pieces, then grid points cycling through three scales: plain
    lengths, quantiles of a random mix of one measure with the uniform one,
    and a cluster of cuts around a random centre at a random width. The last
    two put cuts inside narrow supports of necklace or preference measures."""
    Q = config.grid
    ts = np.linspace(0.0, 1.0, 4 * Q + 1)
    yield np.arange(1, N + 1) / (N + 1)  # equal pieces
    k = 0
    while True:
        grid = np.array(sorted(rng.randrange(Q + 1) for _ in range(N))) / Q
        x = np.clip(grid + np.array([rng.uniform(-0.5, 0.5) / Q for _ in range(N)]), 0, 1)
        k += 1
        if k % 3 == 1 and necklace is not None and necklace.n:
            mu = necklace.measures[rng.randrange(necklace.n)]
            lam = rng.random()
            bps = np.union1d(ts, [float(b) for b in mu.breakpoints])
            cdf = lam * mu.cdf_array(bps) + (1 - lam) * bps
            x = np.interp(x, cdf, bps)
        elif k % 3 == 2 and N >= 2:
            width = float(np.exp(rng.uniform(np.log(1 / Q), np.log(0.25))))
            centre = rng.random()
            j = rng.randint(2, N)
            x[:j] = np.clip([centre + width * (rng.random() - 0.5) for _ in range(j)], 0, 1)
            x = np.sort(x)
        yield x


def _tiers(facets: Iterator[Tuple[int, ...]], limit: int) -> List[List[Tuple[int, ...]]]:
    """Split the facet stream into tiers: allocations without repeated
    neighbours, then the rest."""
    first, rest = [], []
    for f in itertools.islice(facets, limit):
        (rest if any(a == b for a, b in zip(f, f[1:])) else first).append(f)
    return [t for t in (first, rest) if t]


def _search(necklace: Necklace, prefs: PreferenceMatrix, m: int, facets: Iterator[Tuple[int, ...]],
            config: SolverConfig, tail: int = 0, notes: Sequence[str] = ()) -> EnvyFreeResult:
    r = necklace.thieves
    if prefs.r != r:
        raise ValueError(f"{prefs.r} preference rows for {r} thieves")
    start = time.monotonic()
    rng = random.Random(config.seed)
    delta = config.enlargement
    best = (np.inf, None)
    N = m - 1
    found = None
    seen = set()

    def out_of_time():
        return time.monotonic() - start > config.time_limit

    def refine(x, f, d):
        """Halve delta while the zero persists; accept if assigned margins are near 0."""
        last = None
        for k in range(config.refinements + 1):
            if k:
                d /= 2
                x = _descend(necklace, prefs, f, x, d, tail)
            ok = _validate(necklace, prefs, _point(x, f, tail), d, config.epsilon)
            if ok is None:
                break
            last = (ok, d)
        if last is None:
            return None
        (pa, residual, pi, margins), d = last
        if min(margins[j, pi[j]] for j in range(r)) < -config.margin_tol:
            return None
        return last

    tiers = _tiers(facets, config.max_facets)
    for stage in range(config.stages):
        delta = config.enlargement / 4 ** stage
        # round-robin: every facet of a tier gets its k-th seed before any gets its (k+1)-th
        for tier in tiers:
            seeds = [_seeds(N, config, random.Random(rng.random()), necklace) for _ in tier]
            passes = max(config.restarts, -(-config.min_descents // len(tier)))
            for _ in range(passes):
                for f, gen in zip(tier, seeds):
                    if out_of_time():
                        break
                    seen.add(f)
                    x = _descend(necklace, prefs, f, next(gen), delta, tail)
                    res = _residual(necklace, prefs, f, x, delta, tail)
                    if config.epsilon < res < np.inf:
                        x, res = _scan(necklace, prefs, f, x, delta, tail, max(config.grid // 4, 4), res, rng)
                    if res == np.inf:
                        continue
                    pa = _point(x, f, tail)
                    if res < best[0]:
                        best = (res, pa)
                    if res <= config.epsilon:
                        found = refine(x, f, delta)
                        if found is not None:
                            break
                if found is not None or out_of_time():
                    break
            if found is not None or out_of_time():
                break
        if found is not None or out_of_time():
            break
    elapsed = time.monotonic() - start
    if found is None:
        return EnvyFreeResult("unknown", best[1], None, float(best[0]), delta, None, len(seen), elapsed,
                              tuple(notes) + ("epsilon not reached within budget",))
    (pa, residual, pi, margins), d = found
    return EnvyFreeResult("solved", pa, pi, residual, d, margins, len(seen), elapsed, tuple(notes))


def _prime_power_note(r: int) -> Tuple[str, ...]:
    from ..splitter import is_prime_power

    if is_prime_power(r):
        return ()
    return (f"r={r} is not a prime power: existence of a solution is not guaranteed",)


def solve_envy_free(necklace: Necklace, prefs: PreferenceMatrix, config: SolverConfig = SolverConfig()) -> EnvyFreeResult:
    """Envy-free fair splitting with (r - 1)(n + 1) cuts."""
    r, n = necklace.thieves, necklace.n
    m = (r - 1) * (n + 1) + 1
    return _search(necklace, prefs, m, restricted_growth_strings(m, r, alternating_only=True), config,
                   notes=_prime_power_note(r))


def equicardinal_parameters(r: int, n: int) -> Tuple[int, int, int]:
    """(m, k, s) with m = (r - 1)(n + 1) + 1 = rk + s, 0 <= s < r."""
    m = (r - 1) * (n + 1) + 1
    k, s = divmod(m, r)
    return m, k, s


def solve_envy_free_equicardinal(necklace: Necklace, prefs: PreferenceMatrix,
                                 config: SolverConfig = SolverConfig()) -> EnvyFreeResult:
    """Search restricted to almost equicardinal points: (r - 1)(n + 2) cuts,
    r - 1 of them degenerate, each safe holding at most k + 1 non-degenerate
    pieces and at most s safes holding exactly k + 1."""
    r, n = necklace.thieves, necklace.n
    m, k, s = equicardinal_parameters(r, n)
    res = _search(necklace, prefs, m, profile_facets(m, r, k, s), config, tail=r - 1,
                  notes=_prime_power_note(r))
    if res.ok:
        prof = cardinality_profile(res.pa, r)
        assert all(c <= k + 1 for c in prof) and sum(c == k + 1 for c in prof) <= s
    return res


def solve_envy_free_binary(necklace: Necklace, prefs: PreferenceMatrix, d: int,
                           config: SolverConfig = SolverConfig()) -> EnvyFreeResult:
    """Search restricted to allocations walking on the d-cube, r = 2^d."""
    r, n = necklace.thieves, necklace.n
    if r != 2 ** d:
        raise ValueError(f"binary splitting needs r = 2^d, got r={r}, d={d}")
    m = (r - 1) * (n + 1) + 1
    res = _search(necklace, prefs, m, cube_walks(m, d, stays=False), config)
    if res.ok:
        assert is_g_constraint(res.pa, Graph.cube(d))
    return res
