"""Configuration spaces and combinatorial objects: skeleta, (symmetrized)
deleted joins, chessboard complexes, graph-constraint order complexes,
plus unavoidability and balancedness checkers.

Join vertices are pairs ``(block, element)``: in the necklace reading the
block is a thief and the element a piece index.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import limits
from ._matching import perfect_matching

Vertex = Hashable
Face = Tuple[Vertex, ...]


class SimplicialComplex:
    """Finite abstract simplicial complex stored by its facets.

    ``ground`` optionally records the ambient vertex set (the [m] of a
    subcomplex of 2^[m]); it may contain vertices that are not faces.
    """

    def __init__(self, facets: Iterable[Iterable[Vertex]], ground: Optional[Iterable[Vertex]] = None,
                 *, maximal: bool = False):
        sets = {frozenset(f) for f in facets}
        if not maximal:
            sets = _maximal(sets)
        self.facets: Tuple[FrozenSet, ...] = tuple(sorted(sets, key=lambda s: tuple(sorted(s))))
        self.ground = tuple(sorted(ground)) if ground is not None else None
        self._faces: Dict[int, List[Face]] = {}

    def __repr__(self):
        return f"SimplicialComplex(facets={len(self.facets)}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and set(self.facets) == set(other.facets)

    def __hash__(self):
        return hash(frozenset(self.facets))

    @cached_property
    def vertices(self) -> Tuple[Vertex, ...]:
        return tuple(sorted(set().union(*self.facets))) if self.facets else ()

    @property
    def dim(self) -> int:
        return max((len(f) for f in self.facets), default=0) - 1

    def __contains__(self, face) -> bool:
        face = frozenset(face)
        return any(face <= f for f in self.facets)

    contains = __contains__

    def faces(self, d: int) -> List[Face]:
        """All d-dimensional faces as sorted tuples, in deterministic order."""
        if d not in self._faces:
            if d < -1:
                out: List[Face] = []
            elif d == -1:
                out = [()] if self.facets else []
            else:
                seen = set()
                for f in self.facets:
                    if len(f) > d:
                        seen.update(itertools.combinations(sorted(f), d + 1))
                limits.check(len(seen), limits.MAX_FACES, f"faces of dimension {d}")
                out = sorted(seen)
            self._faces[d] = out
        return self._faces[d]

    def f_vector(self) -> List[int]:
        return [len(self.faces(d)) for d in range(self.dim + 1)]

    def all_faces(self) -> List[Face]:
        return [f for d in range(-1, self.dim + 1) for f in self.faces(d)]

    def relabel(self, fn) -> "SimplicialComplex":
        ground = [fn(v) for v in self.ground] if self.ground is not None else None
        return SimplicialComplex(({fn(v) for v in f} for f in self.facets), ground, maximal=True)

    def is_downward_closed_sample(self, rng: np.random.Generator, samples: int = 200) -> bool:
        """Random subsets of random facets must be faces (sanity check for constructors)."""
        if not self.facets:
            return True
        for _ in range(samples):
            f = sorted(self.facets[rng.integers(len(self.facets))])
            keep = [v for v in f if rng.random() < 0.5]
            if frozenset(keep) not in self:
                return False
        return True

    def one_skeleton_connected(self) -> bool:
        """Path-connectivity by breadth-first search over edges."""
        verts = self.vertices
        if not verts:
            return False
        adj: Dict[Vertex, set] = {v: set() for v in verts}
        for f in self.facets:
            fl = list(f)
            for a in fl:
                adj[a].update(fl)
        seen = {verts[0]}
        queue = deque([verts[0]])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(verts)


def _maximal(sets: set) -> set:
    by_size = sorted(sets, key=len, reverse=True)
    kept: List[frozenset] = []
    for s in by_size:
        if not any(s < k for k in kept):
            kept.append(s)
    return set(kept)


def full_simplex(m: int) -> SimplicialComplex:
    return SimplicialComplex([range(m)], range(m), maximal=True)


def bounded_subsets_complex(m: int, c: int) -> SimplicialComplex:
    """All subsets of [m] with at most c elements."""
    if not 0 <= c <= m:
        raise ValueError("need 0 <= c <= m")
    return SimplicialComplex(itertools.combinations(range(m), c), range(m), maximal=True)


# ---------------------------------------------------------------- labeled simplices

@dataclass(frozen=True)
class LabeledSimplex:
    parts: Tuple[FrozenSet[int], ...]
    complement: FrozenSet[int]

    @classmethod
    def from_face(cls, face: Iterable[Tuple[int, int]], r: int, m: int) -> "LabeledSimplex":
        parts = [set() for _ in range(r)]
        for block, elem in face:
            parts[block].add(elem)
        used = set().union(*parts)
        return cls(tuple(frozenset(p) for p in parts), frozenset(range(m)) - used)

    def __post_init__(self):
        seen: set = set()
        for p in self.parts:
            if seen & p:
                raise ValueError("parts must be pairwise disjoint")
            seen |= p
        if seen & self.complement:
            raise ValueError("complement meets a part")
        if not seen:
            raise ValueError("some part must be nonempty")

    def as_face(self) -> Face:
        return tuple(sorted((i, j) for i, p in enumerate(self.parts) for j in p))


def simplex_dimension(s: LabeledSimplex, m: int) -> int:
    union = frozenset().union(*s.parts)
    if union | s.complement != frozenset(range(m)):
        raise ValueError("parts and complement must tile [m]")
    dim = len(union) - 1
    assert dim == m - len(s.complement) - 1
    return dim


# ---------------------------------------------------------------- joins

def _ground_of(family: Sequence[SimplicialComplex]) -> Tuple[int, ...]:
    grounds = {K.ground for K in family}
    if len(grounds) != 1 or None in grounds:
        raise ValueError("all complexes must share an explicit ground set [m]")
    return grounds.pop()


def _join_facets(family: Sequence[SimplicialComplex], symmetric: bool) -> SimplicialComplex:
    r = len(family)
    ground = _ground_of(family)
    limits.check((r + 1) ** len(ground), limits.MAX_ENUMERATION, "join enumeration (r+1)^m")
    member_cache: Dict[Tuple[int, FrozenSet], bool] = {}

    def member(j: int, part: FrozenSet) -> bool:
        key = (j, part)
        if key not in member_cache:
            member_cache[key] = part in family[j]
        return member_cache[key]

    def feasible(parts: List[FrozenSet]) -> bool:
        if not symmetric:
            return all(member(i, p) for i, p in enumerate(parts))
        adj = [[j for j in range(r) if member(j, p)] for p in parts]
        return perfect_matching(adj, r)[0] is not None

    facets: List[Face] = []
    parts: List[FrozenSet] = [frozenset()] * r

    def extendable(parts: List[FrozenSet], unused: List[int]) -> bool:
        for e in unused:
            for i in range(r):
                trial = list(parts)
                trial[i] = parts[i] | {e}
                if feasible(trial):
                    return True
        return False

    def dfs(idx: int, unused: List[int]):
        if idx == len(ground):
            if any(parts) and not extendable(parts, unused):
                facets.append(tuple(sorted((i, j) for i, p in enumerate(parts) for j in p)))
                limits.check(len(facets), limits.MAX_FACES, "join facets")
            return
        e = ground[idx]
        for i in range(r):
            old = parts[i]
            parts[i] = old | {e}
            if feasible(parts):
                dfs(idx + 1, unused)
            parts[i] = old
        dfs(idx + 1, unused + [e])

    dfs(0, [])
    return SimplicialComplex(facets, [(i, j) for i in range(r) for j in ground], maximal=True)


def deleted_join(family: Sequence[SimplicialComplex]) -> SimplicialComplex:
    """K_1 *_Delta ... *_Delta K_r on vertices (block, element)."""
    return _join_facets(family, symmetric=False)


def symm_deleted_join(family: Sequence[SimplicialComplex]) -> SimplicialComplex:
    """Union of the deleted joins over all reorderings of the family."""
    return _join_facets(family, symmetric=True)


def chessboard(m: int, r: int) -> SimplicialComplex:
    """Non-attacking rook placements on [m] x [r]; vertex (column i in [r], row j in [m])."""
    if m < 1 or r < 1:
        raise ValueError("need m, r >= 1")
    if m >= r:
        facets = ([(i, j) for i, j in enumerate(p)] for p in itertools.permutations(range(m), r))
    else:
        facets = ([(i, j) for j, i in enumerate(p)] for p in itertools.permutations(range(r), m))
    return SimplicialComplex(facets, [(i, j) for i in range(r) for j in range(m)], maximal=True)


def skeleta_family(r: int, n: int) -> List[SimplicialComplex]:
    """s copies of the <=(k+1)-subsets and r-s copies of the <=k-subsets of [m],
    m = (r-1)(n+1)+1, (k, s) from (r-1)n+1 = kr+s."""
    from .core import ks_parameters

    k, s = ks_parameters(r, n)
    m = (r - 1) * (n + 1) + 1
    big, small = bounded_subsets_complex(m, k + 1), bounded_subsets_complex(m, k)
    return [big] * s + [small] * (r - s)


# ---------------------------------------------------------------- checkers

def minimal_nonfaces(K: SimplicialComplex, ground: Optional[Sequence[Vertex]] = None) -> List[FrozenSet]:
    ground = tuple(ground if ground is not None else (K.ground or K.vertices))
    if not K.facets:
        return [frozenset()]
    out = set()
    for face in K.all_faces():
        fs = frozenset(face)
        for v in ground:
            if v in fs:
                continue
            cand = fs | {v}
            if cand in out or cand in K:
                continue
            if all((cand - {u}) in K for u in cand):
                out.add(cand)
    return sorted(out, key=lambda s: (len(s), tuple(sorted(s))))


def _disjoint_nonface_tuple(family: Sequence[SimplicialComplex], ground) -> Optional[Tuple[FrozenSet, ...]]:
    """An ordered tuple of pairwise disjoint sets with A_i not in K_i, if one exists.

    Any such tuple contains one made of minimal non-faces, so searching over
    minimal non-faces is exhaustive.
    """
    options = [minimal_nonfaces(K, ground) for K in family]
    chosen: List[FrozenSet] = []

    def dfs(i: int, used: FrozenSet) -> bool:
        if i == len(family):
            return True
        for N in options[i]:
            if not (N & used):
                chosen.append(N)
                if dfs(i + 1, used | N):
                    return True
                chosen.pop()
        return False

    return tuple(chosen) if dfs(0, frozenset()) else None


def _guard(r: int, m: int) -> None:
    limits.check((r + 1) ** m, limits.MAX_ENUMERATION, "unavoidability enumeration (r+1)^m")


def _ground(K: SimplicialComplex, m: Optional[int]):
    if m is not None:
        return tuple(range(m))
    if K.ground is None:
        raise ValueError("complex has no ground set; pass m")
    return K.ground


def is_r_unavoidable(K: SimplicialComplex, r: int, m: Optional[int] = None) -> bool:
    ground = _ground(K, m)
    _guard(r, len(ground))
    return _disjoint_nonface_tuple([K] * r, ground) is None


def is_collectively_unavoidable(family: Sequence[SimplicialComplex], m: Optional[int] = None) -> bool:
    return collective_unavoidability_witness(family, m) is None


def collective_unavoidability_witness(family: Sequence[SimplicialComplex], m: Optional[int] = None):
    """None if the ordered family is collectively unavoidable, else a violating tuple."""
    ground = _ground(family[0], m)
    _guard(len(family), len(ground))
    return _disjoint_nonface_tuple(family, ground)


def unavoidable_by_assignments(family: Sequence[SimplicialComplex], m: int) -> bool:
    """Literal enumeration of all maps [m] -> {blocks, unused}; oracle for tiny cases."""
    r = len(family)
    _guard(r, m)
    for assign in itertools.product(range(r + 1), repeat=m):
        parts = [frozenset(j for j, a in enumerate(assign) if a == i) for i in range(r)]
        if all(p not in K for p, K in zip(parts, family)):
            return False
    return True


def is_balanced(K: SimplicialComplex, m: int, c: int) -> bool:
    """<=c-subsets of [m] subset K subset <=(c+1)-subsets of [m]."""
    if any(len(f) > c + 1 for f in K.facets):
        return False
    if any(not set(f) <= set(range(m)) for f in K.facets):
        return False
    return all(frozenset(s) in K for s in itertools.combinations(range(m), c))


def pigeonhole_unavoidable(caps: Sequence[int], m: int) -> bool:
    """Cardinality skeleta with bounds caps are collectively unavoidable iff sum(cap+1) > m."""
    return sum(c + 1 for c in caps) > m


# ---------------------------------------------------------------- graphs and posets

class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError("loops are not allowed")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError("edge endpoint out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def complete(cls, r: int) -> "Graph":
        return cls(r, frozenset(itertools.combinations(range(r), 2)))

    @classmethod
    def single(cls) -> "Graph":
        return cls(1, frozenset())

    @classmethod
    def cycle(cls, r: int) -> "Graph":
        return cls(r, frozenset((i, (i + 1) % r) for i in range(r)) if r > 2 else
                   frozenset(itertools.combinations(range(r), 2)))

    @classmethod
    def path(cls, r: int) -> "Graph":
        return cls(r, frozenset((i, i + 1) for i in range(r - 1)))

    @classmethod
    def cube(cls, d: int) -> "Graph":
        g = cls.single()
        for _ in range(d):
            g = prism(g)
        return g

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, v: int) -> List[int]:
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs distances by breadth-first layers; -1 marks unreachable."""
        dist = np.full((self.n, self.n), -1, dtype=int)
        nbrs = [self.neighbors(v) for v in range(self.n)]
        for s in range(self.n):
            dist[s, s] = 0
            frontier = [s]
            while frontier:
                nxt = []
                for v in frontier:
                    for w in nbrs[v]:
                        if dist[s, w] < 0:
                            dist[s, w] = dist[s, v] + 1
                            nxt.append(w)
                frontier = nxt
        return dist

    @property
    def connected(self) -> bool:
        return bool((self.distances >= 0).all())

    def shortest_path(self, a: int, b: int) -> List[int]:
        path = [a]
        while path[-1] != b:
            v = path[-1]
            path.append(next(w for w in self.neighbors(v) if self.distances[w, b] == self.distances[v, b] - 1))
        return path


def prism(G: Graph) -> Graph:
    """Two copies of G (vertex v and v + n) joined by the vertical edges {v, v + n}."""
    n = G.n
    edges = set(G.edges) | {(a + n, b + n) for a, b in G.edges} | {(v, v + n) for v in range(n)}
    return Graph(2 * n, frozenset(edges))


def parse_graph(spec: str) -> Graph:
    """``cube:d``, ``complete:r``, ``cycle:r``, ``path:r`` or ``edges:r:0-1,1-2``."""
    kind, _, rest = spec.partition(":")
    if kind == "cube":
        return Graph.cube(int(rest))
    if kind == "complete":
        return Graph.complete(int(rest))
    if kind == "cycle":
        return Graph.cycle(int(rest))
    if kind == "path":
        return Graph.path(int(rest))
    if kind == "edges":
        r, _, es = rest.partition(":")
        pairs = [tuple(int(x) for x in e.split("-")) for e in es.split(",") if e]
        return Graph(int(r), frozenset(pairs))
    raise ValueError(f"unknown graph spec {spec!r}")


class Poset:
    """Finite poset with the order materialised as a boolean matrix."""

    def __init__(self, elements: Sequence[Hashable], leq: np.ndarray):
        self.elements = list(elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.leq = np.asarray(leq, dtype=bool)
        n = len(self.elements)
        if self.leq.shape != (n, n):
            raise ValueError("order matrix has the wrong shape")
        if not self.leq.diagonal().all():
            raise ValueError("order is not reflexive")
        if (self.leq & self.leq.T & ~np.eye(n, dtype=bool)).any():
            raise ValueError("order is not antisymmetric")
        closure = (self.leq.astype(np.int64) @ self.leq.astype(np.int64)) > 0
        if (closure & ~self.leq).any():
            raise ValueError("order is not transitive")

    def __len__(self):
        return len(self.elements)

    def le(self, a, b) -> bool:
        return bool(self.leq[self.index[a], self.index[b]])

    @cached_property
    def covers(self) -> List[List[int]]:
        """covers[i] = indices j with i < j and nothing strictly between."""
        n = len(self)
        lt = self.leq & ~np.eye(n, dtype=bool)
        out = []
        for i in range(n):
            above = np.flatnonzero(lt[i])
            out.append([int(j) for j in above if not (lt[i] & lt[:, j]).any()])
        return out

    @classmethod
    def chain(cls, k: int) -> "Poset":
        return cls(list(range(k)), np.triu(np.ones((k, k), dtype=bool)))

    @classmethod
    def antichain(cls, k: int) -> "Poset":
        return cls(list(range(k)), np.eye(k, dtype=bool))


def g_constraint_poset(G: Graph, m: int) -> Poset:
    """(x, i) <= (y, j) iff i <= j and dist(x, y) <= j - i, on V x [m]."""
    if not G.connected:
        raise DisconnectedGraphError("graph must be connected")
    elements = [(x, i) for i in range(m) for x in range(G.n)]
    dist = G.distances
    levels = np.array([i for _, i in elements])
    verts = np.array([x for x, _ in elements])
    gap = levels[None, :] - levels[:, None]
    leq = (gap >= 0) & (dist[verts[:, None], verts[None, :]] <= gap)
    return Poset(elements, leq)


def order_complex(P: Poset) -> SimplicialComplex:
    """Complex of chains; facets are the maximal chains (maximal cover paths)."""
    n = len(P)
    below = P.leq & ~np.eye(n, dtype=bool)
    minimal = [i for i in range(n) if not below[:, i].any()]
    facets: List[List] = []
    stack = [[i] for i in reversed(minimal)]
    while stack:
        chain = stack.pop()
        ups = P.covers[chain[-1]]
        if not ups:
            facets.append([P.elements[i] for i in chain])
            limits.check(len(facets), limits.MAX_FACES, "order complex facets")
            continue
        for j in reversed(ups):
            stack.append(chain + [j])
    return SimplicialComplex(facets, P.elements, maximal=True)


def g_constraint_complex(G: Graph, m: int) -> SimplicialComplex:
    """K_G^m: union of the simplices of G-constraint allocation walks [m] -> V.

    Vertices are (thief, piece) like the deleted-join vertices.
    """
    return order_complex(g_constraint_poset(G, m))


def count_g_walks(G: Graph, m: int) -> int:
    """Number of stay-or-step walks of length m, by dynamic programming."""
    ways = np.ones(G.n, dtype=object)
    step = np.eye(G.n, dtype=object)
    for a, b in G.edges:
        step[a, b] = step[b, a] = 1
    for _ in range(m - 1):
        ways = step.dot(ways)
    return int(sum(ways))


# ---------------------------------------------------------------- exchange format

def _fmt_vertex(v) -> str:
    return ":".join(str(x) for x in v) if isinstance(v, tuple) else str(v)


def _parse_vertex(tok: str):
    if ":" in tok:
        return tuple(int(x) for x in tok.split(":"))
    try:
        return int(tok)
    except ValueError:
        return tok


def dumps_complex(K: SimplicialComplex) -> str:
    """One facet per line, sorted vertex labels; pair labels written ``a:b``."""
    lines = [" ".join(_fmt_vertex(v) for v in sorted(f)) for f in K.facets]
    return "\n".join(sorted(lines, key=lambda l: [_sort_token(t) for t in l.split()])) + "\n"


def _sort_token(t: str):
    return tuple(int(x) for x in t.split(":")) if t.replace(":", "").isdigit() else (t,)


class ComplexParseError(ValueError):
    pass


def loads_complex(text: str) -> SimplicialComplex:
    facets = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            verts = [_parse_vertex(t) for t in toks]
        except ValueError as exc:
            raise ComplexParseError(f"line {lineno}: bad vertex label ({exc})") from exc
        if len({type(v) for v in verts}) > 1:
            raise ComplexParseError(f"line {lineno}, column 1: mixed vertex label types")
        facets.append(verts)
    return SimplicialComplex(facets)


def generate(kind: str, *args: str) -> SimplicialComplex:
    """Named generators used by the CLI: chessboard, skeleton, kgm, thm32, primary."""
    if kind == "chessboard":
        return chessboard(int(args[0]), int(args[1]))
    if kind == "skeleton":
        return bounded_subsets_complex(int(args[0]), int(args[1]))
    if kind == "kgm":
        # kgm <graph> <param> <m>, e.g. kgm cube 2 3
        G = parse_graph(f"{args[0]}:{args[1]}")
        return g_constraint_complex(G, int(args[2]))
    if kind == "thm32":
        return symm_deleted_join(skeleta_family(int(args[0]), int(args[1])))
    if kind == "primary":
        r, m = int(args[0]), int(args[1])
        return deleted_join([full_simplex(m)] * r)
    raise ValueError(f"unknown generator {kind!r}")
