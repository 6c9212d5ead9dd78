import itertools
import math

import numpy as np
import pytest

from necklace import limits
from necklace.complexes import (
    DisconnectedGraphError,
    Graph,
    LabeledSimplex,
    Poset,
    SimplicialComplex,
    bounded_subsets_complex,
    chessboard,
    count_g_walks,
    deleted_join,
    dumps_complex,
    full_simplex,
    g_constraint_complex,
    g_constraint_poset,
    generate,
    is_balanced,
    is_collectively_unavoidable,
    is_r_unavoidable,
    loads_complex,
    order_complex,
    pigeonhole_unavoidable,
    prism,
    simplex_dimension,
    skeleta_family,
    symm_deleted_join,
    unavoidable_by_assignments,
)


def brute_join_faces(family, symmetric):
    """All faces of the (symmetrized) deleted join, by enumerating maps [m] -> blocks or unused."""
    r = len(family)
    m = len(family[0].ground)
    faces = set()
    for assign in itertools.product(range(r + 1), repeat=m):
        parts = [frozenset(j for j in range(m) if assign[j] == i) for i in range(r)]
        orders = itertools.permutations(range(r)) if symmetric else [tuple(range(r))]
        if any(all(parts[i] in family[pi[i]] for i in range(r)) for pi in orders):
            faces.add(frozenset((i, j) for j in range(m) for i in range(r) if assign[j] == i))
    return faces


def all_faces(K):
    return {frozenset(f) for f in K.all_faces()}


# ---------------------------------------------------------------- skeleta

def test_bounded_subsets_examples():
    K = bounded_subsets_complex(3, 1)
    assert K.f_vector() == [3]
    assert bounded_subsets_complex(3, 3) == full_simplex(3)
    assert len(bounded_subsets_complex(4, 2).facets) == 6


@pytest.mark.parametrize("m,c", [(5, 2), (6, 3), (4, 0)])
def test_bounded_subsets_facet_count(m, c):
    assert len(bounded_subsets_complex(m, c).facets) == math.comb(m, c)


# ---------------------------------------------------------------- joins

def test_deleted_join_examples():
    assert len(deleted_join([full_simplex(3)] * 2).facets) == 8
    square = deleted_join([full_simplex(2)] * 2)
    assert len(square.facets) == 4 and square.dim == 1
    assert len(deleted_join([bounded_subsets_complex(2, 1)] * 3).facets) == 6


def test_symm_deleted_join_examples():
    hexagon = symm_deleted_join([bounded_subsets_complex(3, 1)] * 2)
    assert hexagon == chessboard(3, 2)
    assert hexagon.f_vector() == [6, 6]
    d74 = symm_deleted_join([bounded_subsets_complex(7, 1)] * 4)
    assert len(d74.faces(3)) == 840


@pytest.mark.parametrize("family", [
    [bounded_subsets_complex(3, 1), bounded_subsets_complex(3, 2)],
    [bounded_subsets_complex(4, 2), bounded_subsets_complex(4, 1)],
    [bounded_subsets_complex(3, 1), bounded_subsets_complex(3, 0), full_simplex(3)],
])
def test_joins_match_brute_force(family):
    assert all_faces(deleted_join(family)) == brute_join_faces(family, False)
    assert all_faces(symm_deleted_join(family)) == brute_join_faces(family, True)


def test_join_inclusions_and_symmetry():
    family = [bounded_subsets_complex(4, 2), bounded_subsets_complex(4, 1)]
    dj, sdj = all_faces(deleted_join(family)), all_faces(symm_deleted_join(family))
    top = all_faces(deleted_join([full_simplex(4)] * 2))
    assert dj <= sdj <= top
    swapped = {frozenset((1 - i, j) for i, j in f) for f in sdj}
    assert swapped == sdj


def test_lemma_dimension_identity_on_every_face():
    r, n = 3, 1
    K = symm_deleted_join(skeleta_family(r, n))
    m = (r - 1) * (n + 1) + 1
    for face in K.all_faces():
        if face:
            s = LabeledSimplex.from_face(face, r, m)
            assert simplex_dimension(s, m) == len(face) - 1 == m - len(s.complement) - 1


def test_simplex_dimension_examples():
    assert simplex_dimension(LabeledSimplex((frozenset({0}), frozenset({1})), frozenset({2})), 3) == 1
    assert simplex_dimension(LabeledSimplex((frozenset(range(5)), frozenset()), frozenset()), 5) == 4
    with pytest.raises(ValueError):
        LabeledSimplex((frozenset({0}), frozenset({0})), frozenset())


def test_downward_closed_sample():
    rng = np.random.default_rng(0)
    for K in (chessboard(4, 3), symm_deleted_join(skeleta_family(2, 2)), g_constraint_complex(Graph.cube(2), 3)):
        assert K.is_downward_closed_sample(rng)


# ---------------------------------------------------------------- chessboards

def test_chessboard_examples():
    hexagon = chessboard(3, 2)
    assert len(hexagon.vertices) == 6 and len(hexagon.faces(1)) == 6
    assert chessboard(1, 1).f_vector() == [1]
    assert chessboard(2 * 2 - 1, 2) == hexagon


@pytest.mark.parametrize("m,r", [(4, 2), (5, 3), (3, 3), (2, 4)])
def test_chessboard_is_symm_join_of_points(m, r):
    rooks = chessboard(m, r)
    assert len(rooks.facets) == math.perm(max(m, r), min(m, r))
    if m >= r:
        assert rooks == symm_deleted_join([bounded_subsets_complex(m, 1)] * r)


# ---------------------------------------------------------------- unavoidability

def test_r_unavoidable_examples():
    assert is_r_unavoidable(full_simplex(4), 3)
    empty_only = SimplicialComplex([[]], range(3))
    assert not is_r_unavoidable(empty_only, 2)
    assert is_r_unavoidable(bounded_subsets_complex(3, 1), 2)


def test_collective_unavoidability_examples():
    assert is_collectively_unavoidable([full_simplex(3)] * 2)
    fam = skeleta_family(4, 2)  # m = 10, (k, s) = (1, 3)
    assert is_collectively_unavoidable(fam)
    k, s = 1, 3
    m = 10
    swapped = [bounded_subsets_complex(m, k + 1)] * (4 - s) + [bounded_subsets_complex(m, k)] * s
    assert is_collectively_unavoidable(swapped) == pigeonhole_unavoidable([k + 1] * (4 - s) + [k] * s, m)


@pytest.mark.parametrize("caps,m", [((1, 1), 3), ((1, 1), 4), ((0, 2), 3), ((1, 0, 1), 4), ((0, 0, 1), 4)])
def test_pigeonhole_matches_enumeration(caps, m):
    fam = [bounded_subsets_complex(m, c) for c in caps]
    assert is_collectively_unavoidable(fam) == unavoidable_by_assignments(fam, m) == pigeonhole_unavoidable(caps, m)


def test_order_matters_for_collective_unavoidability():
    m = 2
    A = SimplicialComplex([[0]], range(m))          # only {0}
    B = SimplicialComplex([[1], []], range(m))      # only {1}
    assert is_collectively_unavoidable([A, B]) == unavoidable_by_assignments([A, B], m)
    assert is_collectively_unavoidable([B, A]) == unavoidable_by_assignments([B, A], m)


def test_capacity_guard(monkeypatch):
    monkeypatch.setenv("NECKLACE_MAX_ENUMERATION", "100")
    with pytest.raises(limits.CapacityError, match="exceeds limit 100"):
        is_r_unavoidable(full_simplex(6), 2)


def test_balanced_examples():
    assert is_balanced(bounded_subsets_complex(5, 2), 5, 2)
    assert not is_balanced(bounded_subsets_complex(5, 4), 5, 2)
    K = SimplicialComplex(list(itertools.combinations(range(5), 2)) + [(0, 1, 2)], range(5))
    assert is_balanced(K, 5, 2)
    assert is_balanced(SimplicialComplex(list(itertools.combinations(range(4), 1)) + [(0, 1)], range(4)), 4, 1)


# ---------------------------------------------------------------- graphs and posets

def test_prism_examples():
    c1 = prism(Graph.single())
    assert (c1.n, len(c1.edges)) == (2, 1)
    c2 = prism(c1)
    assert (c2.n, len(c2.edges)) == (4, 4)
    c3 = prism(c2)
    assert (c3.n, len(c3.edges)) == (8, 12)
    for G in (Graph.cycle(5), Graph.path(3)):
        P = prism(G)
        assert P.n == 2 * G.n and len(P.edges) == 2 * len(G.edges) + G.n


def test_poset_examples():
    P = g_constraint_poset(Graph.complete(3), 3)
    for (x, i), (y, j) in itertools.product(P.elements, repeat=2):
        assert P.le((x, i), (y, j)) == ((x, i) == (y, j) or i < j)
    chain = g_constraint_poset(Graph.single(), 3)
    assert all(chain.le((0, i), (0, j)) == (i <= j) for i in range(3) for j in range(3))
    sq = g_constraint_poset(Graph.cube(2), 2)
    A, C = 0, 3  # cube vertices 0 and 3 are antipodal
    assert Graph.cube(2).distances[A, C] == 2
    assert not sq.le((A, 0), (C, 1)) and not sq.le((C, 1), (A, 0))


def test_disconnected_graph_rejected():
    with pytest.raises(DisconnectedGraphError):
        g_constraint_poset(Graph(3, frozenset({(0, 1)})), 2)


def test_order_complex_examples():
    assert order_complex(Poset.chain(3)) == full_simplex(3)
    assert order_complex(Poset.antichain(4)).f_vector() == [4]
    K = order_complex(g_constraint_poset(Graph.cube(2), 2))
    assert len(K.facets) == 12 and K.dim == 1


def brute_walks(G, m):
    return sum(
        all(a == b or G.has_edge(a, b) for a, b in zip(f, f[1:]))
        for f in itertools.product(range(G.n), repeat=m)
    )


@pytest.mark.parametrize("G", [Graph.complete(2), Graph.cube(2), Graph.cube(3), Graph.path(3), Graph.cycle(5)])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_g_constraint_facets_are_walks(G, m):
    K = g_constraint_complex(G, m)
    assert len(K.facets) == brute_walks(G, m) == count_g_walks(G, m)
    walks = {tuple(x for x, _ in sorted(f, key=lambda v: v[1])) for f in K.facets}
    assert all(all(a == b or G.has_edge(a, b) for a, b in zip(w, w[1:])) for w in walks)


def test_g_constraint_complex_examples():
    assert len(g_constraint_complex(Graph.complete(2), 3).facets) == 8
    assert len(g_constraint_complex(Graph.cube(2), 3).facets) == 36
    assert g_constraint_complex(Graph.cube(2), 1).f_vector() == [4]


def test_complete_graph_complex_is_primary_space():
    K = g_constraint_complex(Graph.complete(3), 2)
    primary = deleted_join([full_simplex(2)] * 3)
    assert K == primary


# ---------------------------------------------------------------- exchange format

def test_exchange_round_trip_and_determinism():
    for K in (chessboard(3, 2), g_constraint_complex(Graph.cube(2), 2), bounded_subsets_complex(4, 2)):
        text = dumps_complex(K)
        assert loads_complex(text) == K
        assert dumps_complex(loads_complex(text)) == text


def test_generators():
    assert generate("chessboard", "3", "2") == chessboard(3, 2)
    assert len(generate("kgm", "cube", "2", "3").facets) == 36
    assert generate("thm32", "2", "1") == symm_deleted_join(skeleta_family(2, 1))
    with pytest.raises(ValueError):
        generate("nope")
