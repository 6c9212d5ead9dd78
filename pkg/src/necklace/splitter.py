"""Exact discrete necklace-splitting search under the constraint regimes:
none, (k, s)-equicardinal, graph walks, and collectively unavoidable
complex families. Cuts sit on bead boundaries.
"""
from __future__ import annotations

import itertools
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence, Tuple

from . import limits
from ._matching import perfect_matching
from .complexes import Graph, SimplicialComplex, collective_unavoidability_witness, is_balanced
from .core import (BeadString, PartitionAllocation, SplitReport, cardinality_profile, discrete_to_continuous, is_g_constraint, ks_parameters,
                   profile_is_ks)


class PreconditionError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}: {witness}")
        self.witness = witness


def is_prime_power(r: int) -> bool:
    if r < 2:
        return False
    p = next(q for q in range(2, r + 1) if r % q == 0)
    while r % p == 0:
        r //= p
    return r == 1


def prime_of(r: int) -> int:
    return next(q for q in range(2, r + 1) if r % q == 0)


@dataclass(frozen=True)
class SearchBudget:
    max_cuts: Optional[int] = None  # None: (r - 1) n
    node_limit: int = 5_000_000
    time_limit: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("limits must be positive")
        if self.max_cuts is not None and self.max_cuts < 0:
            raise ValueError("max_cuts must be non-negative")


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str = "none"
    k: Optional[int] = None
    s: Optional[int] = None
    graph: Optional[Graph] = None
    family: Optional[Tuple[SimplicialComplex, ...]] = None

    def __post_init__(self):
        if self.kind not in ("none", "equicardinal", "graph", "complex_family"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "equicardinal" and (self.k is None or self.s is None or self.k < 0 or self.s < 0):
            raise ValueError("equicardinal needs k, s >= 0")
        if self.kind == "graph" and self.graph is None:
            raise ValueError("graph constraint needs a graph")
        if self.kind == "complex_family" and not self.family:
            raise ValueError("complex_family needs a family")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def equicardinal(cls, k: int, s: int):
        return cls("equicardinal", k=k, s=s)

    @classmethod
    def for_graph(cls, graph: Graph):
        return cls("graph", graph=graph)

    @classmethod
    def complex_family(cls, family: Sequence[SimplicialComplex]):
        return cls("complex_family", family=tuple(family))

    @property
    def symmetric(self) -> bool:
        """Invariant under relabelling thieves (graph walks are not, in general)."""
        return self.kind != "graph"

    def check(self, pa: PartitionAllocation, r: int) -> bool:
        if self.kind == "none":
            return True
        if self.kind == "equicardinal":
            return profile_is_ks(cardinality_profile(pa, r), self.k, self.s)
        if self.kind == "graph":
            return is_g_constraint(pa, self.graph)
        return realizes_family(pa, self.family, r)


def realizes_family(pa: PartitionAllocation, family: Sequence[SimplicialComplex], r: int) -> bool:
    """(A_1..A_r; B_x) lies in SymmDelJoin(family), A_i = nondegenerate pieces of thief i."""
    m = len(family[0].ground)
    if pa.m != m:
        return False
    parts = [frozenset(pa.owned(i, nondegenerate=True)) for i in range(r)]
    adj = [[j for j, K in enumerate(family) if p in K] for p in parts]
    return perfect_matching(adj, len(family))[0] is not None


@dataclass
class SearchResult:
    status: str  # "sat", "unsat" or "unknown"
    report: Optional[SplitReport] = None
    nodes: int = 0
    elapsed: float = 0.0
    notes: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "sat"


class _OutOfBudget(Exception):
    pass


class _Search:
    """Depth-first scan over beads; at each boundary either extend the current
    piece or cut and hand the next piece to another thief."""

    def __init__(self, beads: BeadString, r: int, max_cuts: int, constraint: ConstraintSpec,
                 budget: SearchBudget, owner_order: Sequence[int]):
        self.beads = beads
        self.r = r
        self.types = beads.type_index()
        self.n = len(beads.types)
        self.target = [c // r for c in beads.multiplicities.values()]
        self.max_cuts = max_cuts
        self.c = constraint
        self.budget = budget
        self.order = list(owner_order)
        self.nodes = 0
        self.deadline = time.monotonic() + budget.time_limit
        self.dead: set = set()
        self.use_memo = constraint.kind != "complex_family"
        if constraint.kind == "graph":
            self.dist = constraint.graph.distances
        if constraint.kind == "complex_family":
            self.cap = max(max((len(f) for f in K.facets), default=0) for K in constraint.family)
            self.m = len(constraint.family[0].ground)

    def cost(self, a: int, b: int) -> int:
        return int(self.dist[a, b]) if self.c.kind == "graph" else 1

    def piece_ok(self, pieces: List[int], thief: int) -> bool:
        c = self.c
        if c.kind == "equicardinal":
            new = pieces[thief] + 1
            if new > c.k + 1:
                return False
            if new == c.k + 1 and sum(p == c.k + 1 for p in pieces) >= c.s:
                return False
        elif c.kind == "complex_family":
            return pieces[thief] + 1 <= self.cap
        return True

    def run(self, first_cut: Optional[int] = None):
        counts = [[0] * self.n for _ in range(self.r)]
        pieces = [0] * self.r
        t0 = self.types[0]
        starts = [0] if self.c.symmetric else self.order
        for o in starts:
            if self.target[t0] == 0:
                break
            counts[o][t0] = 1
            pieces[o] = 1
            found = self._dfs(1, o, counts, pieces, 0, [o], [], first_cut)
            counts[o][t0] = 0
            pieces[o] = 0
            if found is not None:
                return found
        return None

    def _dfs(self, pos, owner, counts, pieces, cuts, walk, cut_pos, first_cut):
        self.nodes += 1
        if self.nodes > self.budget.node_limit or (self.nodes & 1023 == 0 and time.monotonic() > self.deadline):
            raise _OutOfBudget
        L = len(self.beads)
        if pos == L:
            return self._leaf(walk, cut_pos)
        key = None
        if self.use_memo:
            key = (pos, owner, tuple(map(tuple, counts)), cuts, tuple(pieces))
            if key in self.dead:
                return None
        t = self.types[pos]
        forced_cut = first_cut is not None and not cut_pos and pos == first_cut
        # extend the current piece
        if not forced_cut and counts[owner][t] < self.target[t]:
            counts[owner][t] += 1
            res = self._dfs(pos + 1, owner, counts, pieces, cuts, walk, cut_pos, first_cut)
            counts[owner][t] -= 1
            if res is not None:
                return res
        if first_cut is not None and not cut_pos and pos != first_cut:
            return None  # this worker's subtree places its first cut at first_cut
        # cut here
        used = set(walk)
        fresh_allowed = True
        for nxt in self.order:
            if nxt == owner or counts[nxt][t] >= self.target[t]:
                continue
            if self.c.symmetric and nxt not in used:
                # unused thieves are interchangeable: try only the first one
                if not fresh_allowed:
                    continue
                fresh_allowed = False
            step = self.cost(owner, nxt)
            if cuts + step > self.max_cuts or not self.piece_ok(pieces, nxt):
                continue
            path = self.c.graph.shortest_path(owner, nxt)[1:] if self.c.kind == "graph" else [nxt]
            counts[nxt][t] += 1
            pieces[nxt] += 1
            res = self._dfs(pos + 1, nxt, counts, pieces, cuts + step, walk + path,
                            cut_pos + [pos] * step, first_cut)
            counts[nxt][t] -= 1
            pieces[nxt] -= 1
            if res is not None:
                return res
        if key is not None:
            self.dead.add(key)
        return None

    def _leaf(self, walk, cut_pos):
        # every bead is placed and no thief exceeds its share, so all shares are exact
        L = len(self.beads)
        pa = PartitionAllocation(tuple(Fraction(c, L) for c in cut_pos), tuple(walk))
        if self.c.kind == "complex_family":
            return self._place_in_family(pa)
        return pa

    def _place_in_family(self, pa: PartitionAllocation) -> Optional[PartitionAllocation]:
        """Pad with degenerate pieces so the pieces fill [m] and realise a join simplex."""
        owners = pa.allocation
        k = len(owners)
        if k > self.m:
            return None
        for slots in itertools.combinations(range(self.m), k):
            cuts, alloc = [], []
            ends = list(pa.cuts) + [Fraction(1)]
            idx = 0
            pos = Fraction(0)
            for slot in range(self.m):
                if idx < k and slot == slots[idx]:
                    alloc.append(owners[idx])
                    pos = ends[idx]
                    idx += 1
                else:
                    alloc.append(alloc[-1] if alloc else owners[0])
                cuts.append(pos)
            padded = PartitionAllocation(tuple(cuts[:-1]), tuple(alloc))
            if realizes_family(padded, self.c.family, self.r):
                return padded
        return None


def _search_entry(args):
    beads, r, max_cuts, constraint, budget, order, first_cut = args
    s = _Search(beads, r, max_cuts, constraint, budget, order)
    try:
        return s.run(first_cut), s.nodes, False
    except _OutOfBudget:
        return None, s.nodes, True


def _solve(beads: BeadString, r: int, constraint: ConstraintSpec, budget: SearchBudget,
           notes: Sequence[str] = (), workers: int = 1, restarts: int = 1) -> SearchResult:
    beads.check_divisible(r)
    n = len(beads.types)
    max_cuts = budget.max_cuts if budget.max_cuts is not None else (r - 1) * n
    start = time.monotonic()
    rng = random.Random(budget.seed)
    total_nodes = 0
    exhausted = False
    pa = None
    for attempt in range(max(1, restarts)):
        order = list(range(r))
        if attempt or budget.seed:
            rng.shuffle(order)
        if workers > 1:
            # one subtree per first-cut position, largest first as in the sequential order;
            # results are read in job order so the reported splitting does not depend on timing
            jobs = [(beads, r, max_cuts, constraint, budget, order, fc) for fc in range(len(beads), 0, -1)]
            with ProcessPoolExecutor(workers) as pool:
                futures = [pool.submit(_search_entry, j) for j in jobs]
                for fut in futures:
                    if pa is not None:
                        fut.cancel()
                        continue
                    res, nodes, out = fut.result()
                    total_nodes += nodes
                    exhausted |= out
                    pa = res
        else:
            res, nodes, out = _search_entry((beads, r, max_cuts, constraint, budget, order, None))
            total_nodes += nodes
            exhausted |= out
            pa = res
        if pa is not None or not exhausted:
            break
    elapsed = time.monotonic() - start
    if pa is None:
        status = "unknown" if exhausted else "unsat"
        return SearchResult(status, None, total_nodes, elapsed, tuple(notes))
    report = _validated_report(beads, r, pa, constraint, max_cuts, notes)
    return SearchResult("sat", report, total_nodes, elapsed, tuple(notes))


def _validated_report(beads, r, pa, constraint, max_cuts, notes) -> SplitReport:
    """Re-check a solution with the core predicates, independently of the search."""
    necklace = discrete_to_continuous(beads, r)
    flags = {
        "fair": None,
        "equicardinal": None,
        "g_constraint": None,
        "complex_family": None,
        "cut_bound": None,
    }
    report = SplitReport.build(necklace, pa, notes=notes)
    flags["fair"] = report.fairness_residual == 0
    n_cuts = distinct_cuts(pa) if constraint.kind == "complex_family" else len(pa.cuts)
    flags["cut_bound"] = n_cuts <= max_cuts
    if constraint.kind == "equicardinal":
        flags["equicardinal"] = constraint.check(pa, r)
    elif constraint.kind == "graph":
        flags["g_constraint"] = constraint.check(pa, r)
    elif constraint.kind == "complex_family":
        flags["complex_family"] = constraint.check(pa, r)
    bad = [k for k, v in flags.items() if v is False]
    if bad:
        raise AssertionError(f"solver produced an invalid splitting ({bad}): {pa}")
    report = SplitReport.build(necklace, pa, {k: v for k, v in flags.items() if v is not None}, notes)
    return report


def distinct_cuts(pa: PartitionAllocation) -> int:
    return len({c for c in pa.cuts if 0 < c < 1})


def solve_fair(beads: BeadString, r: int, budget: SearchBudget = SearchBudget(), *, workers: int = 1) -> SearchResult:
    return _solve(beads, r, ConstraintSpec.none(), budget, workers=workers)


def _theorem_note(r: int) -> Tuple[str, ...]:
    if is_prime_power(r):
        return ()
    return (f"r={r} is not a prime power: existence is not guaranteed by the constrained splitting theorems",)


def solve_equicardinal(beads: BeadString, r: int, budget: SearchBudget = SearchBudget(), *,
                       workers: int = 1) -> SearchResult:
    k, s = ks_parameters(r, len(beads.types))
    return _solve(beads, r, ConstraintSpec.equicardinal(k, s), budget, _theorem_note(r), workers=workers)


def solve_g_constraint(beads: BeadString, r: int, G: Graph, budget: SearchBudget = SearchBudget(), *,
                       workers: int = 1, restarts: int = 1) -> SearchResult:
    if G.n != r:
        raise ValueError(f"graph has {G.n} vertices, expected r={r}")
    if not G.connected:
        raise PreconditionError("graph must be connected")
    notes = ()
    if r & (r - 1) or G != Graph.cube(r.bit_length() - 1):
        notes = ("graph is not a cube with r = 2^d: existence is not guaranteed by the binary splitting theorem",)
    return _solve(beads, r, ConstraintSpec.for_graph(G), budget, notes, workers=workers, restarts=restarts)


def check_family_preconditions(family: Sequence[SimplicialComplex], r: int, n: int):
    """Returns a list of violated preconditions (empty if the family qualifies)."""
    problems = []
    if len(family) != r:
        problems.append(("family size", len(family)))
        return problems
    m = (r - 1) * (n + 1) + 1
    for K in family:
        if K.ground is None or len(K.ground) != m:
            problems.append(("ground set must be [m]", m))
            return problems
    k, _ = ks_parameters(r, n)
    for i, K in enumerate(family):
        if not is_balanced(K, m, k):
            problems.append(("not (m,k)-balanced", (i, m, k)))
    witness = collective_unavoidability_witness(family)
    if witness is not None:
        problems.append(("not collectively unavoidable", tuple(sorted(w) for w in witness)))
    return problems


def solve_complex_constrained(beads: BeadString, r: int, family: Sequence[SimplicialComplex],
                              budget: SearchBudget = SearchBudget(), *, strict: bool = True,
                              workers: int = 1) -> SearchResult:
    """Fair splitting whose non-degenerate share index sets realise a simplex of
    SymmDelJoin(family). The returned allocation has m pieces; the cut bound
    counts distinct cut points. ``strict=False`` runs despite failed
    preconditions and records them as notes.
    """
    n = len(beads.types)
    problems = check_family_preconditions(family, r, n)
    notes = list(_theorem_note(r))
    if problems:
        if strict or problems[0][0] in ("family size", "ground set must be [m]"):
            raise PreconditionError(problems[0][0], problems[0][1])
        notes += sorted({f"precondition not met ({p}); existence not guaranteed" for p, _ in problems})
    return _solve(beads, r, ConstraintSpec.complex_family(family), budget, notes, workers=workers)


def solve(beads: BeadString, r: int, constraint: ConstraintSpec, budget: SearchBudget = SearchBudget(),
          **kw) -> SearchResult:
    if constraint.kind == "none":
        return solve_fair(beads, r, budget, **kw)
    if constraint.kind == "equicardinal":
        return _solve(beads, r, constraint, budget, _theorem_note(r), **kw)
    if constraint.kind == "graph":
        return solve_g_constraint(beads, r, constraint.graph, budget, **kw)
    return solve_complex_constrained(beads, r, constraint.family, budget, **kw)


# ---------------------------------------------------------------- oracle

def oracle_size(L: int, r: int, max_cuts: int) -> int:
    return comb(max(L - 1, 0), max_cuts) * r ** (max_cuts + 1)


def brute_force_oracle(beads: BeadString, r: int, max_cuts: int,
                       constraint: ConstraintSpec = ConstraintSpec(),
                       limit: Optional[int] = None) -> List[PartitionAllocation]:
    """All fair integer-cut splittings with at most max_cuts cuts that satisfy
    the constraint. Cut sets are enumerated exhaustively; owner assignments
    are enumerated depth-first, dropping branches where a thief already
    exceeds its share (such branches contain no fair splitting).

    Graph walks pay dist(a, b) cuts per owner change; the missing steps are
    realised as degenerate pieces along a shortest path. Complex families get
    their pieces padded to [m] as in :func:`solve_complex_constrained`.

    Solutions come in order of increasing cut-set size; ``limit`` stops the
    enumeration early (``limit=1`` is a satisfiability query).
    """
    beads.check_divisible(r)
    L = len(beads)
    limits.check(oracle_size(L, r, max_cuts), limits.MAX_ENUMERATION, "oracle enumeration C(L-1,K) r^(K+1)")
    types = beads.type_index()
    n = len(beads.types)
    target = [c // r for c in beads.multiplicities.values()]
    out: List[PartitionAllocation] = []
    helper = None
    if constraint.kind == "complex_family":
        helper = _Search(beads, r, max_cuts, constraint, SearchBudget(), range(r))
    for c in range(0, min(max_cuts, L - 1) + 1):
        for cut_set in itertools.combinations(range(1, L), c):
            bounds = (0,) + cut_set + (L,)
            contents = []
            for a, b in zip(bounds, bounds[1:]):
                v = [0] * n
                for i in range(a, b):
                    v[types[i]] += 1
                contents.append(v)
            for owners in _owner_assignments(contents, r, target):
                pa = _oracle_pa(cut_set, owners, L, max_cuts, constraint, r, helper)
                if pa is not None:
                    out.append(pa)
                    if limit is not None and len(out) >= limit:
                        return out
    return out


def _owner_assignments(contents, r, target):
    totals = [[0] * len(target) for _ in range(r)]
    owners: List[int] = []

    def rec(i):
        if i == len(contents):
            if all(t == target for t in totals):
                yield tuple(owners)
            return
        v = contents[i]
        for o in range(r):
            if all(totals[o][t] + v[t] <= target[t] for t in range(len(target))):
                for t in range(len(target)):
                    totals[o][t] += v[t]
                owners.append(o)
                yield from rec(i + 1)
                owners.pop()
                for t in range(len(target)):
                    totals[o][t] -= v[t]

    yield from rec(0)


def _oracle_pa(cut_set, owners, L, max_cuts, constraint, r, helper):
    cuts = [Fraction(x, L) for x in cut_set]
    if constraint.kind == "graph":
        G = constraint.graph
        walk, all_cuts = [owners[0]], []
        for x, (a, b) in zip(cuts, zip(owners, owners[1:])):
            path = G.shortest_path(a, b)[1:] if a != b else [b]
            walk += path
            all_cuts += [x] * len(path)
        if len(all_cuts) > max_cuts:
            return None
        return PartitionAllocation(tuple(all_cuts), tuple(walk))
    pa = PartitionAllocation(tuple(cuts), owners)
    if constraint.kind == "equicardinal" and not constraint.check(pa, r):
        return None
    if constraint.kind == "complex_family":
        return helper._place_in_family(pa)
    return pa
