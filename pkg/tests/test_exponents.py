import json

import pytest

from corrmoment.moment_engine import LEADING, SUBLEADING, bound_trace_moment, predict_exponent
from corrmoment.partitions import Partition, catalan, enumerate_partitions_no_singletons, is_crossing


def test_leading_pair():
    r = predict_exponent(Partition.of([[1, 2], [3, 4]]))
    assert r.predicted_exponent == 3 and r.normalized_exponent == 0
    assert r.verdict == LEADING


def test_antipodal_octagon():
    r = predict_exponent(Partition.of([[1, 5], [2, 6], [3, 7], [4, 8]]))
    assert r.normalized_exponent <= -0.5
    assert r.verdict == SUBLEADING


def test_k3_block():
    r = predict_exponent(Partition.of([[1, 2, 3]]))
    assert r.predicted_exponent == 2
    assert r.normalized_exponent == -0.5
    assert r.verdict == SUBLEADING


def test_two_four_blocks():
    r = predict_exponent(Partition.of([[1, 2, 3, 4], [5, 6, 7, 8]]))
    assert r.f_block_sizes == [4, 4] and r.x_set_size == 8
    assert r.predicted_exponent == pytest.approx(4.5)
    assert r.verdict == SUBLEADING


def test_report_invariants_all_k8():
    for p in enumerate_partitions_no_singletons(8):
        r = predict_exponent(p)
        assert (r.verdict == LEADING) == (r.normalized_exponent == 0)
        if r.verdict == LEADING:
            assert p.is_pairing and not is_crossing(p)
        if r.f_block_sizes:
            assert r.x_set_size >= 4 * len(r.f_block_sizes)
        # exponents are half-integers
        assert (2 * r.predicted_exponent) == int(2 * r.predicted_exponent)
        json.dumps(r.to_dict())


def test_crossing_pairings_gain_half():
    for p in enumerate_partitions_no_singletons(6):
        if p.is_pairing and is_crossing(p):
            assert predict_exponent(p).predicted_exponent <= 6 / 2 + 0.5


def test_bound_small_k():
    b2 = bound_trace_moment(2)
    assert len(b2.per_partition) == 1 and b2.leading_count == 1 and b2.bound_exponent == 0
    b4 = bound_trace_moment(4)
    assert len(b4.per_partition) == 4 and b4.leading_count == 2
    assert bound_trace_moment(6).leading_count == 5


def test_bound_odd_k():
    assert bound_trace_moment(1).to_dict()["bound_exponent"] is None
    b3 = bound_trace_moment(3)
    assert b3.leading_count == 0 and b3.bound_exponent == -0.5
    assert bound_trace_moment(5).leading_count == 0


@pytest.mark.parametrize("k", range(2, 11))
def test_bound_nonpositive(k):
    b = bound_trace_moment(k)
    assert b.bound_exponent <= 0
    if k % 2 == 0:
        assert b.leading_count == catalan(k // 2)


@pytest.mark.slow
def test_bound_k12():
    b = bound_trace_moment(12)
    assert b.bound_exponent <= 0 and b.leading_count == catalan(6)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        Partition.of([[1], [2, 3]])
