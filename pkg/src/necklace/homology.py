"""Reduced simplicial homology over F_p and homological connectivity certificates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

from . import limits
from .complexes import Face, SimplicialComplex


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


@dataclass
class BoundaryMatrix:
    """Sparse boundary map C_dim -> C_{dim-1} over F_p, stored column-wise.

    For dim == 0 this is the augmentation C_0 -> F_p (single row for the
    empty face), which turns the homology into reduced homology.
    """

    dim: int
    p: int
    rows: List[Face]
    cols: List[Face]
    columns: List[Dict[int, int]]

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.cols)

    def to_dense(self):
        import numpy as np

        out = np.zeros(self.shape, dtype=np.int64)
        for j, col in enumerate(self.columns):
            for i, v in col.items():
                out[i, j] = v
        return out

    def rank(self) -> int:
        return rank_mod_p(self.columns, self.p)


def boundary_matrix(K: SimplicialComplex, dim: int, p: int) -> BoundaryMatrix:
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if not 0 <= dim <= K.dim:
        raise ValueError(f"dim {dim} outside 0..{K.dim}")
    rows = K.faces(dim - 1)
    cols = K.faces(dim)
    index = {f: i for i, f in enumerate(rows)}
    columns = []
    for face in cols:
        col = {}
        for k in range(len(face)):
            sub = face[:k] + face[k + 1:]
            col[index[sub]] = (-1) ** k % p
        columns.append(col)
    return BoundaryMatrix(dim, p, rows, cols, columns)


def compose_is_zero(lower: BoundaryMatrix, upper: BoundaryMatrix) -> bool:
    """lower . upper == 0 over F_p (lower = boundary in dim d, upper in dim d + 1)."""
    p = lower.p
    for col in upper.columns:
        acc: Dict[int, int] = {}
        for i, v in col.items():
            for r, w in lower.columns[i].items():
                acc[r] = (acc.get(r, 0) + v * w) % p
        if any(acc.values()):
            return False
    return True


def rank_mod_p(columns: List[Dict[int, int]], p: int) -> int:
    """Column elimination with first-nonzero pivoting, columns in the given order."""
    if p == 2:
        return _rank_gf2(columns)
    pivots: Dict[int, Dict[int, int]] = {}
    rank = 0
    for raw in columns:
        col = {r: v % p for r, v in raw.items() if v % p}
        while col:
            piv = min(col)
            basis = pivots.get(piv)
            if basis is None:
                inv = pow(col[piv], -1, p)
                pivots[piv] = {r: v * inv % p for r, v in col.items()}
                rank += 1
                break
            c = col[piv]
            for r, v in basis.items():
                nv = (col.get(r, 0) - c * v) % p
                if nv:
                    col[r] = nv
                else:
                    col.pop(r, None)
    return rank


def _rank_gf2(columns: List[Dict[int, int]]) -> int:
    pivots: Dict[int, int] = {}
    rank = 0
    for raw in columns:
        bits = 0
        for r, v in raw.items():
            if v & 1:
                bits |= 1 << r
        while bits:
            low = (bits & -bits).bit_length() - 1
            other = pivots.get(low)
            if other is None:
                pivots[low] = bits
                rank += 1
                break
            bits ^= other
    return rank


@dataclass
class BettiProfile:
    p: int
    reduced_betti: List[int]
    face_counts: List[int]
    ranks: List[int] = field(default_factory=list)

    @property
    def acyclic(self) -> bool:
        return not any(self.reduced_betti)

    @property
    def connectivity(self) -> Union[int, str]:
        """Largest c with vanishing reduced Betti numbers up to c; "top" if all vanish."""
        if self.acyclic:
            return "top"
        c = -1
        for b in self.reduced_betti:
            if b:
                break
            c += 1
        return c

    @property
    def reduced_euler(self) -> int:
        return -1 + sum((-1) ** i * f for i, f in enumerate(self.face_counts))

    def alternating_sum(self) -> int:
        return sum((-1) ** i * b for i, b in enumerate(self.reduced_betti))

    def vanishes_through(self, c: int) -> bool:
        return all(b == 0 for b in self.reduced_betti[: c + 1])

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "reduced_betti": list(self.reduced_betti),
            "face_counts": list(self.face_counts),
            "connectivity": self.connectivity,
            "reduced_euler": self.reduced_euler,
        }


class ChainComplexError(AssertionError):
    pass


def betti_profile(K: SimplicialComplex, p: int) -> BettiProfile:
    top = K.dim
    if top < 0:
        return BettiProfile(p, [], [])
    counts = [len(K.faces(d)) for d in range(top + 1)]
    for d, c in enumerate(counts):
        limits.check(c, limits.MAX_FACES, f"faces of dimension {d}")
    mats = [boundary_matrix(K, d, p) for d in range(top + 1)]
    for lower, upper in zip(mats, mats[1:]):
        if not compose_is_zero(lower, upper):
            raise ChainComplexError(f"boundary composition nonzero in dimension {upper.dim}")
    ranks = [m.rank() for m in mats] + [0]
    betti = [counts[i] - ranks[i] - ranks[i + 1] for i in range(top + 1)]
    prof = BettiProfile(p, betti, counts, ranks[:-1])
    if prof.alternating_sum() != prof.reduced_euler:
        raise ChainComplexError("Euler characteristic mismatch")
    return prof


@dataclass
class ConnectivityCertificate:
    passed: bool
    claimed: int
    p: int
    profile: BettiProfile
    path_connected: bool
    reason: str
    scope: str = "homological over F_p plus path-connectivity; pi_1 not certified"

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "claimed": self.claimed,
            "p": self.p,
            "path_connected": self.path_connected,
            "reason": self.reason,
            "scope": self.scope,
            "profile": self.profile.as_dict(),
        }


def connectivity_certificate(K: SimplicialComplex, claimed: int, p: int) -> ConnectivityCertificate:
    prof = betti_profile(K, p)
    connected = K.one_skeleton_connected()
    if claimed >= 0 and not connected:
        return ConnectivityCertificate(False, claimed, p, prof, connected, "not path-connected")
    bad = [i for i, b in enumerate(prof.reduced_betti[: claimed + 1]) if b]
    if bad:
        i = bad[0]
        return ConnectivityCertificate(
            False, claimed, p, prof, connected, f"reduced Betti number in degree {i} is {prof.reduced_betti[i]}"
        )
    return ConnectivityCertificate(True, claimed, p, prof, connected, "all reduced Betti numbers vanish through the claim")
