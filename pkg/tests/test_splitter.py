import random
from fractions import Fraction as F

import pytest

from necklace import limits
from necklace.complexes import Graph, bounded_subsets_complex, full_simplex, skeleta_family
from necklace.core import (
    BeadString,
    PartitionAllocation,
    ValidationError,
    cardinality_profile,
    is_g_constraint,
    ks_parameters,
    profile_is_ks,
)
from necklace.splitter import (
    ConstraintSpec,
    PreconditionError,
    SearchBudget,
    brute_force_oracle,
    distinct_cuts,
    is_prime_power,
    solve,
    solve_complex_constrained,
    solve_equicardinal,
    solve_fair,
    solve_g_constraint,
)


def B(text):
    return BeadString.parse(text)


def bead_cuts(report, L):
    return [int(c * L) for c in report.pa.cuts]


def random_beads(rng, r, n, max_len=16):
    per = max(1, max_len // (r * n))
    counts = [r * rng.randint(1, per) for _ in range(n)]
    beads = [chr(97 + t) for t, c in enumerate(counts) for _ in range(c)]
    rng.shuffle(beads)
    return BeadString(tuple(beads))


# ---------------------------------------------------------------- examples

def test_solve_fair_examples():
    res = solve_fair(B("aabb"), 2)
    assert res.ok and bead_cuts(res.report, 4) == [1, 3] and res.report.pa.allocation == (0, 1, 0)
    res = solve_fair(B("aaaa"), 2)
    assert res.ok and bead_cuts(res.report, 4) == [2]
    res = solve_fair(B("abab"), 2)
    assert res.ok and len(res.report.pa.cuts) <= 2 and res.report.fairness_residual == 0
    assert PartitionAllocation((F(1, 4), F(3, 4)), (0, 1, 0)) in brute_force_oracle(B("abab"), 2, 2)


def test_equicardinal_examples():
    for r in (2, 3, 4):
        beads = B("".join(random.Random(r).sample("a" * (2 * r), 2 * r)))
        res = solve_equicardinal(beads, r)
        assert res.ok and cardinality_profile(res.report.pa, r) == (1,) * r
    # pairwise separated types force all 3 cuts
    res = solve_equicardinal(B("aabbcc"), 2)
    assert res.ok and cardinality_profile(res.report.pa, 2) == (2, 2)
    rng = random.Random(1)
    for _ in range(5):
        res = solve_equicardinal(random_beads(rng, 4, 2), 4)
        assert res.ok
        prof = sorted(cardinality_profile(res.report.pa, 4), reverse=True)
        assert profile_is_ks(prof, 1, 3)
        assert all(sum(prof[:i]) <= sum((2, 2, 2, 1)[:i]) for i in range(1, 5))


def test_g_constraint_examples():
    res = solve_g_constraint(B("abab"), 2, Graph.cube(1))
    assert res.ok and res.report.fairness_residual == 0
    # two disjoint-support types on the square, as in the "I then J" pattern
    square = Graph.cube(2)
    res = solve_g_constraint(B("aaaabbbb"), 4, square)
    assert res.ok and len(res.report.pa.cuts) <= 6 and is_g_constraint(res.report.pa, square)
    res = solve_g_constraint(B("a" * 8), 4, square)
    assert res.ok and len(res.report.pa.cuts) == 3
    walk = res.report.pa.allocation
    assert len(set(walk)) == 4 and is_g_constraint(res.report.pa, square)


def test_out_and_back_walk_on_the_square_is_accepted():
    # cube vertices 0,1,3,2 go around the square
    A, Bv, C, D = 0, 1, 3, 2
    f = (A, Bv, C, D, D, C, Bv, A)
    cuts = tuple(F(k, 8) for k in range(1, 8))
    pa = PartitionAllocation(cuts, f)
    spec = ConstraintSpec.for_graph(Graph.cube(2))
    assert spec.check(pa, 4)
    sols = brute_force_oracle(B("aaaabbbb"), 4, 6, spec)
    assert sols and all(is_g_constraint(p, Graph.cube(2)) for p in sols)


def test_complex_constrained_examples():
    beads = B("aabbabab")
    r, n = 2, 2
    res = solve_complex_constrained(beads, r, skeleta_family(r, n))
    k, s = ks_parameters(r, n)
    assert res.ok and profile_is_ks(cardinality_profile(res.report.pa, r), k, s)
    m = (r - 1) * (n + 1) + 1
    res_full = solve_complex_constrained(beads, r, [full_simplex(m)] * r, strict=False)
    assert res_full.ok and any("precondition" in note for note in res_full.notes)
    q = 2  # r q > (r - 1) n
    res_q = solve_complex_constrained(beads, r, [bounded_subsets_complex(m, q)] * r, strict=False)
    assert res_q.ok and max(cardinality_profile(res_q.report.pa, r)) <= q


def test_complex_family_strict_preconditions():
    r, n = 2, 2
    m = (r - 1) * (n + 1) + 1
    with pytest.raises(PreconditionError):
        solve_complex_constrained(B("aabb"), r, [full_simplex(m)] * r)
    with pytest.raises(PreconditionError):
        solve_complex_constrained(B("aabb"), r, [bounded_subsets_complex(m, 0)] * r)


def test_oracle_examples():
    sols = brute_force_oracle(B("aabb"), 2, 2)
    assert PartitionAllocation((F(1, 4), F(3, 4)), (0, 1, 0)) in sols
    # one bead per type cannot be shared by two thieves, so use a single type
    assert set(brute_force_oracle(B("aa"), 2, 1)) == {
        PartitionAllocation((F(1, 2),), (0, 1)),
        PartitionAllocation((F(1, 2),), (1, 0)),
    }
    with pytest.raises(ValidationError):
        brute_force_oracle(B("aab"), 2, 1)


def test_oracle_capacity_guard(monkeypatch):
    monkeypatch.setenv("NECKLACE_MAX_ENUMERATION", "10")
    with pytest.raises(limits.CapacityError):
        brute_force_oracle(B("aabbaabb"), 2, 2)


def test_non_prime_power_is_flagged():
    assert not is_prime_power(6) and is_prime_power(4)
    res = solve_equicardinal(B("a" * 6), 6)
    assert res.ok and any("prime power" in note for note in res.notes)


def test_non_cube_graph_is_flagged_and_disconnected_rejected():
    res = solve_g_constraint(B("aaa"), 3, Graph.path(3))
    assert res.ok and res.notes
    with pytest.raises(PreconditionError):
        solve_g_constraint(B("aaaa"), 4, Graph(4, frozenset({(0, 1), (2, 3)})))


# ---------------------------------------------------------------- budget and soundness

def test_budget_exhaustion_reports_unknown():
    rng = random.Random(9)
    beads = random_beads(rng, 3, 3, 24)
    res = solve_fair(beads, 3, SearchBudget(node_limit=3))
    assert res.status == "unknown" and res.report is None


def test_tight_cut_budget_is_unsat_exactly_when_oracle_empty():
    rng = random.Random(4)
    for _ in range(40):
        beads = random_beads(rng, 2, 2, 10)
        K = rng.randint(0, 2)
        res = solve_fair(beads, 2, SearchBudget(max_cuts=K))
        assert res.status in ("sat", "unsat")
        assert res.ok == bool(brute_force_oracle(beads, 2, K, limit=1))


@pytest.mark.parametrize("seed", range(4))
def test_oracle_agreement_fuzz(seed):
    rng = random.Random(100 + seed)
    for _ in range(25):
        r = rng.choice([2, 3, 4])
        n = rng.randint(1, 3 if r < 4 else 2)
        beads = random_beads(rng, r, n)
        K = (r - 1) * n
        kinds = [ConstraintSpec.none(), ConstraintSpec.equicardinal(*ks_parameters(r, n))]
        if r == 4:
            kinds.append(ConstraintSpec.for_graph(Graph.cube(2)))
        for spec in kinds:
            res = solve(beads, r, spec)
            assert res.status != "unknown"
            assert res.ok == bool(brute_force_oracle(beads, r, K, spec, limit=1))
            if res.ok:
                assert res.report.fairness_residual == 0 and len(res.report.pa.cuts) <= K
                assert spec.check(res.report.pa, r)


def test_monotonicity_of_oracle_solution_sets():
    rng = random.Random(7)
    for _ in range(15):
        beads = random_beads(rng, 2, 2, 8)
        K = 2
        eq = set(brute_force_oracle(beads, 2, K, ConstraintSpec.equicardinal(*ks_parameters(2, 2))))
        free = set(brute_force_oracle(beads, 2, K))
        assert eq <= free
    beads = B("aaaabbbb")
    path = set(brute_force_oracle(beads, 4, 6, ConstraintSpec.for_graph(Graph.path(4)), limit=None))
    cube = set(brute_force_oracle(beads, 4, 6, ConstraintSpec.for_graph(Graph(4, Graph.path(4).edges | {(0, 3)}))))
    assert path <= cube


def test_workers_are_deterministic():
    rng = random.Random(11)
    for _ in range(4):
        beads = random_beads(rng, 3, 2, 12)
        one = solve_fair(beads, 3)
        many = solve_fair(beads, 3, workers=3)
        again = solve_fair(beads, 3, workers=3)
        assert one.ok and many.ok
        assert many.report.pa == again.report.pa
        assert many.report.fairness_residual == 0


def test_distinct_cuts_ignores_ends_and_repeats():
    pa = PartitionAllocation((0, F(1, 2), F(1, 2), 1), (0, 1, 0, 1, 0))
    assert distinct_cuts(pa) == 1
