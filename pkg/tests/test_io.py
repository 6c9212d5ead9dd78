import random
from fractions import Fraction as F

import pytest

from necklace.core import BeadString, Measure, Necklace, PartitionAllocation
from necklace.io import (
    Instance,
    InstanceParseError,
    beads_instance,
    format_rational,
    loads_instance,
    parse_rational,
)


def random_instance(rng):
    measures = []
    for _ in range(rng.randint(0, 3)):
        bps = sorted({F(rng.randint(1, 30), 31) for _ in range(rng.randint(0, 3))})
        bps = [F(0)] + bps + [F(1)]
        w = [F(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(len(bps) - 1)]
        tot = sum(x * (b - a) for x, a, b in zip(w, bps, bps[1:]))
        measures.append(Measure(tuple(bps), tuple(x / tot for x in w)))
    r = rng.randint(2, 4)
    beads = BeadString(tuple("ab"[rng.randrange(2)] for _ in range(rng.randint(1, 8)))) if rng.random() < 0.5 else None
    pas = []
    for _ in range(rng.randint(0, 2)):
        cuts = tuple(sorted(F(rng.randint(0, 97), 97) for _ in range(rng.randint(0, 4))))
        pas.append(PartitionAllocation(cuts, tuple(rng.randrange(r) for _ in range(len(cuts) + 1))))
    return Instance(Necklace(tuple(measures), beads, r), pas)


def test_rationals_round_trip():
    for x in (F(0), F(1), F(3, 7), F(-5, 2), F(10**30 + 1, 3)):
        assert parse_rational(format_rational(x)) == x
    assert format_rational(1) == "1/1"


def test_instance_round_trip_is_exact():
    rng = random.Random(0)
    for _ in range(100):
        inst = random_instance(rng)
        text = inst.dumps()
        back = loads_instance(text)
        assert back.dumps() == text
        assert back.necklace.measures == inst.necklace.measures
        assert back.necklace.thieves == inst.necklace.thieves
        assert back.allocations == inst.allocations
        assert back.digest() == inst.digest()


def test_comments_and_blank_lines_are_skipped():
    text = "# a comment\n\n" + beads_instance("aabb", 2).dumps()
    inst = loads_instance(text)
    assert str(inst.necklace.beads) == "aabb" and inst.necklace.thieves == 2


def test_digest_depends_on_content():
    assert beads_instance("aabb", 2).digest() != beads_instance("abab", 2).digest()
    assert len(beads_instance("aabb", 2).digest()) == 16


@pytest.mark.parametrize("text,line,column", [
    ('{"type": "necklace", "r": 2}\n{"type": "allocation", "cuts": ["1/x"], "f": [0, 1]}', 2, 33),
    ('{"type": "necklace", "r": 2,}', 1, 29),
    ('\n\n{"type": "wat"}', 3, 10),
    ('{"type": "allocation", "cuts": ["1/2"], "f": [0, "b"]}', 1, 41),
    ('{"type": "allocation", "cuts": ["1/0"], "f": [0, 1]}', 1, 33),
    ('[1, 2]', 1, 1),
])
def test_parse_errors_carry_line_and_column(text, line, column):
    with pytest.raises(InstanceParseError) as info:
        loads_instance(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert str(info.value).startswith(f"line {line}, column {column}:")


def test_semantic_errors_are_parse_errors():
    bad_measure = '{"type": "necklace", "measures": [{"breakpoints": ["0/1", "1/1"], "densities": ["1/2"]}]}'
    with pytest.raises(InstanceParseError, match="line 1"):
        loads_instance(bad_measure)
    with pytest.raises(InstanceParseError, match="second necklace"):
        loads_instance('{"type": "necklace"}\n{"type": "necklace"}')
    with pytest.raises(InstanceParseError):
        loads_instance('{"type": "allocation", "cuts": ["3/4", "1/4"], "f": [0, 1, 0]}')
