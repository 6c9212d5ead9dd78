import random
from fractions import Fraction as F

import pytest

from necklace.core import PartitionAllocation, PiecewiseConstant, cardinality_profile
from necklace.envyfree import (
    PartitionBalanceError,
    PartitionOracle,
    ak_reduce,
    any_nonempty,
    check_proper,
    contains_point,
    family_of,
    is_partition_balanced,
    longest_piece,
    partition_equivalent,
    preferred_safes,
    signed_measure,
    solve_ak,
    threshold_or_empty,
    well_definedness_violations,
)
from necklace.envyfree.ak import nondegenerate_intervals, random_builtin, random_class_representatives


def on_chessboard(pa):
    return max(cardinality_profile(pa, len(pa.allocation) // 2 + 1)) <= 1


# ---------------------------------------------------------------- partition equivalence

def test_partition_equivalent_examples():
    assert partition_equivalent((0, F(1, 2)), (F(1, 2), 1))
    assert partition_equivalent((F(1, 3), F(2, 3)), (F(1, 3), F(2, 3)))
    assert not partition_equivalent((F(1, 3), F(1, 3)), (F(1, 3), F(2, 3)))
    with pytest.raises(ValueError):
        partition_equivalent((0.5,), (0.5, 0.5))


def piece_containing(y, t):
    return next((a, b) for a, b in nondegenerate_intervals(y) if a <= t <= b)


def test_is_partition_balanced_examples():
    def quarter_piece_long(y):
        a, b = piece_containing(y, 0.25)
        return b - a >= 0.5

    assert is_partition_balanced(quarter_piece_long, 3) == (True, None)
    ok, witness = is_partition_balanced(lambda y: y[0] == 0, 3)
    assert not ok and partition_equivalent(*witness)
    assert is_partition_balanced(lambda y: True, 4)[0]


def test_builtins_are_partition_balanced():
    rng = random.Random(0)
    for r in (2, 3, 4):
        for _ in range(10):
            o = random_builtin(r, rng)
            for i in range(r):
                assert is_partition_balanced(lambda y: o.margins(y)[i] >= 0, r, samples=200)[0], o.name


def test_builtin_oracles():
    assert longest_piece(2).preferred((0.3,)) == {1}
    assert longest_piece(3).preferred((0.0, 0.5)) == {0, 1}
    assert contains_point(0.9, 2).preferred((0.5,)) == {1}
    assert contains_point(0.5, 3, or_empty=True).preferred((0.0, 0.5)) == {0, 1, 2}
    assert threshold_or_empty(0.9, 2).preferred((0.0,)) == {0}
    assert threshold_or_empty(0.9, 2).preferred((0.3,)) == {1}  # longest, no empty piece to take
    assert threshold_or_empty(0.9, 3).preferred((0.3, 0.3)) == {2}
    nu = PiecewiseConstant((0, F(1, 2), 1), (-1, 1))
    assert signed_measure(nu, 3).preferred((0.0, 0.5)) == {1}


# ---------------------------------------------------------------- reduction

def test_ak_reduce_examples():
    matrix = ak_reduce([contains_point(0.9, 2)] * 2)
    pa = PartitionAllocation((0.5, 1.0), (0, 1, 0))
    assert matrix.oracles[0].preferred(family_of(pa, 2)) == {1}
    empty_lover = PartitionOracle(lambda y: [-1.0] * len(nondegenerate_intervals(y))
                                  + [0.0] * (2 - len(nondegenerate_intervals(y))), 2, "empty")
    matrix = ak_reduce([empty_lover] * 2)
    whole = PartitionAllocation((1.0, 1.0), (0, 1, 1))
    assert matrix.oracles[0].preferred(family_of(whole, 2)) == {1}


def test_vanishing_piece_closure():
    # a longest-piece player never wants a piece that is about to vanish
    fam = family_of(PartitionAllocation((1.0, 1.0), (0, 1, 0)), 2)
    assert preferred_safes(longest_piece(2), fam, 2, closure=True)[0] == {0}
    # a player who likes the point 0.999 accepts the vanishing piece at 1
    assert preferred_safes(contains_point(0.999, 2), family_of(PartitionAllocation((0.999, 1.0), (0, 1, 0)), 2),
                           2, closure=True)[0] == {0, 1}


def test_partition_balance_violation_is_reported():
    bad = PartitionOracle(lambda y: [0.0 if y[0] == 0 else -1.0, 0.0, 0.0], 3, "first_cut_zero")
    matrix = ak_reduce([bad] * 3)
    pa = PartitionAllocation((0.3, 0.3, 1.0, 1.0), (0, 1, 2, 0, 1))  # two intervals, one spare cut
    with pytest.raises(PartitionBalanceError) as info:
        matrix.oracles[0].margins(family_of(pa, 3))
    assert partition_equivalent(*info.value.witness)


def test_class_representatives_share_the_family():
    rng = random.Random(1)
    for r in (2, 3, 4):
        for _ in range(50):
            a, b = random_class_representatives(r, rng)
            assert family_of(a, r) == family_of(b, r)
            assert on_chessboard(a) and len(a.allocation) == 2 * r - 1


@pytest.mark.parametrize("r", [2, 3, 4])
def test_well_definedness_fuzz(r):
    rng = random.Random(r)
    prefs = [random_builtin(r, rng) for _ in range(r)]
    assert well_definedness_violations(prefs, pairs=250, seed=r) == []


@pytest.mark.parametrize("r", [2, 3])
def test_reduced_rows_are_proper(r):
    rng = random.Random(10 + r)
    for _ in range(5):
        prefs = [random_builtin(r, rng) for _ in range(r)]
        assert check_proper(ak_reduce(prefs), 2 * r - 1, samples=100, allowed=on_chessboard) is None


# ---------------------------------------------------------------- solver

def test_solve_ak_longest_piece():
    res = solve_ak([longest_piece(2)] * 2)
    assert res.ok and res.intervals == pytest.approx([(0, 0.5), (0.5, 1)], abs=1e-6)
    assert sorted(res.assignment) == sorted(res.intervals)


def test_solve_ak_threshold_and_any():
    prefs = [threshold_or_empty(0.9, 2), any_nonempty(2)]
    res = solve_ak(prefs)
    assert res.ok and min(res.margins) >= -1e-4
    share = res.assignment[0]
    # player 0 takes nothing, a long piece, or (with no empty piece left) the longer one
    assert share is None or share[1] - share[0] >= 0.9 - 1e-4 or len(res.intervals) == 2


def test_solve_ak_contains_half_or_empty():
    prefs = [contains_point(0.5, 3, or_empty=True)] * 3
    res = solve_ak(prefs)
    assert res.ok
    assert all(s is None or s[0] - 1e-6 <= 0.5 <= s[1] + 1e-6 for s in res.assignment)
    assert res.assignment.count(None) >= 1
    assert len([s for s in res.assignment if s is not None]) == len(res.intervals)


@pytest.mark.parametrize("r", [2, 3])
def test_solve_ak_random_profiles(r):
    rng = random.Random(100 + r)
    for _ in range(5):
        prefs = [random_builtin(r, rng) for _ in range(r)]
        res = solve_ak(prefs)
        assert res.ok, [p.name for p in prefs]
        assert min(res.margins) >= -1e-4
        given = [s for s in res.assignment if s is not None]
        assert sorted(given) == sorted(res.intervals)  # every interval goes to one player
