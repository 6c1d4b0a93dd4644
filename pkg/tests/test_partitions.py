import math
from itertools import combinations

import pytest

from corrmoment.partitions import (
    Pairing,
    Partition,
    catalan,
    count_no_singletons,
    dihedral_canonical,
    dihedral_images,
    dihedral_orbits,
    enumerate_pairings,
    enumerate_partitions_no_singletons,
    format_partition,
    is_crossing,
    parse_partition,
)


def set_partitions(items):
    """Every set partition of `items`, by recursion on the first element."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for r in range(len(rest) + 1):
        for mates in combinations(rest, r):
            left = [x for x in rest if x not in mates]
            for tail in set_partitions(left):
                yield [(first, *mates)] + tail


def double_factorial(m):
    return math.prod(range(m, 0, -2))


def test_small_enumerations():
    assert [str(p) for p in enumerate_partitions_no_singletons(2)] == ["{{1,2}}"]
    assert [str(p) for p in enumerate_partitions_no_singletons(3)] == ["{{1,2,3}}"]
    four = {str(p) for p in enumerate_partitions_no_singletons(4)}
    assert four == {"{{1,2},{3,4}}", "{{1,3},{2,4}}", "{{1,4},{2,3}}", "{{1,2,3,4}}"}


def test_counts_against_independent_enumeration():
    for k in range(1, 9):
        brute = [p for p in set_partitions(list(range(1, k + 1))) if min(map(len, p)) >= 2]
        got = enumerate_partitions_no_singletons(k)
        assert len(got) == len(brute) == count_no_singletons(k)
        assert {Partition.of(b) for b in brute} == set(got)


def test_count_recurrence_values():
    # singleton-free set partitions: 1, 0, 1, 1, 4, 11, 41, 162, 715, 3425
    assert [count_no_singletons(k) for k in range(10)] == [1, 0, 1, 1, 4, 11, 41, 162, 715, 3425]


def test_cap():
    with pytest.raises(ValueError, match="expansion order too large"):
        enumerate_partitions_no_singletons(13)
    with pytest.raises(ValueError):
        enumerate_pairings(18)
    with pytest.raises(ValueError):
        enumerate_pairings(5)


def test_pairing_counts():
    for k in (2, 4, 6, 8, 10):
        ps = enumerate_pairings(k)
        assert len(ps) == double_factorial(k - 1)
        assert all(isinstance(p, Pairing) for p in ps)
    assert len(enumerate_pairings(8)) == 105


def test_pairings_subset_of_partitions():
    for k in (2, 4, 6, 8):
        pairs = {p for p in enumerate_partitions_no_singletons(k) if p.is_pairing}
        assert pairs == set(enumerate_pairings(k))


def test_crossing_examples():
    assert is_crossing(Partition.of([[1, 3], [2, 4]]))
    assert not is_crossing(Partition.of([[1, 2], [3, 4]]))
    assert not is_crossing(Partition.of([[1, 4], [2, 3]]))
    assert is_crossing(Partition.of([[1, 5], [2, 6], [3, 7], [4, 8]]))


def test_noncrossing_count_is_catalan():
    for k in range(2, 13, 2):
        nc = sum(not is_crossing(p) for p in enumerate_pairings(k))
        assert nc == catalan(k // 2)


def test_catalan():
    assert [catalan(m) for m in range(8)] == [1, 1, 2, 5, 14, 42, 132, 429]
    assert catalan(15) == 9694845


def test_round_trip():
    for k in range(2, 9):
        for p in enumerate_partitions_no_singletons(k):
            assert parse_partition(format_partition(p)) == p
            assert parse_partition(str(p)) == p


def test_json_form():
    p = Partition.of([[3, 4], [1, 2]])
    assert format_partition(p) == "[[1,2],[3,4]]"
    assert p.blocks == ((1, 2), (3, 4))


def test_validation():
    with pytest.raises(ValueError):
        Partition.of([[1, 2], [2, 3]])
    with pytest.raises(ValueError):
        Partition.of([[1, 2], [3]])
    with pytest.raises(ValueError):
        Partition.of([[1, 2]], k=3)
    with pytest.raises(ValueError):
        Pairing(4, ((1, 2, 3, 4),))


def test_pairing_equals_partition():
    a = Partition.of([[1, 2], [3, 4]])
    b = enumerate_pairings(4)[0]
    assert a == b and hash(a) == hash(b)


def test_dihedral_orbits():
    p = Partition.of([[1, 2], [3, 4]])
    assert set(dihedral_images(p)) == {p, Partition.of([[1, 4], [2, 3]])}
    parts = enumerate_partitions_no_singletons(8)
    orbits = dihedral_orbits(parts)
    assert sum(len(v) for v in orbits.values()) == len(parts)
    assert len(orbits) == 81
    for rep, members in orbits.items():
        assert all(dihedral_canonical(q) == rep for q in members)
    # crossing is a property of the chord diagram, so orbits never mix
    for rep, members in dihedral_orbits(enumerate_pairings(8)).items():
        assert len({is_crossing(q) for q in members}) == 1


@pytest.mark.slow
def test_k12_count():
    assert len(enumerate_partitions_no_singletons(12)) == count_no_singletons(12) == 580317
