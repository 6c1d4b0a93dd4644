import json

import pytest

from corrmoment.moment_engine import certify_exponents, certify_leading
from corrmoment.moment_engine.certify import OK, UNATTAINABLE, VIOLATION, TermCertificate, _judge, _OrbitResult
from corrmoment.partitions import Partition, catalan, enumerate_partitions_no_singletons

GRID = (6, 9, 12)


def test_k4_all_ok():
    rows = certify_exponents(4, GRID)
    assert len(rows) == 4
    assert all(r.status == OK for r in rows)
    assert [r.partition for r in rows] == sorted(enumerate_partitions_no_singletons(4))


def test_orbit_members_share_values():
    rows = {r.partition: r for r in certify_exponents(4, GRID)}
    a = rows[Partition.of([[1, 2], [3, 4]])]
    b = rows[Partition.of([[1, 4], [2, 3]])]
    assert a.values == b.values and a.measured == b.measured


def test_pairings_only():
    rows = certify_exponents(6, GRID, pairings_only=True)
    assert len(rows) == 15
    assert all(r.passed for r in rows)


def test_cost_cap_marks_unattainable():
    rows = certify_exponents(4, GRID, cost_cap=500)
    assert {r.status for r in rows} == {UNATTAINABLE}
    assert all("exceeds cap" in r.detail and r.values == [] for r in rows)
    json.dumps([r.to_dict() for r in rows], allow_nan=True)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_leading_delta_kernel(k):
    rows = certify_leading(k, (8, 12, 16))
    assert len(rows) == catalan(k // 2)
    for r in rows:
        assert r.target == "exact" and r.predicted == k / 2 + 1
        assert r.passed, (r.partition, r.measured)


def test_judge():
    res = _OrbitResult([1.0, 2.0, 4.0], 3.3, 0.0)
    assert _judge("bound", 3.0, res, 0.25)[0] == VIOLATION
    assert _judge("bound", 3.1, res, 0.25)[0] == OK
    assert _judge("exact", 4.0, res, 0.25)[0] == VIOLATION
    assert _judge("exact", 3.0, _OrbitResult(skipped="x"), 0.25) == (UNATTAINABLE, "x")


def test_grid_checks():
    with pytest.raises(ValueError, match="grid needs >= 3 points"):
        certify_exponents(4, (8, 12))
    with pytest.raises(ValueError, match="strictly increasing"):
        certify_leading(4, (8, 16, 12))


def test_certificate_dict():
    c = TermCertificate(Partition.of([[1, 2]]), 2.0, (4, 8, 16), [1, 2, 3], 1.9, 0.01, 0.25, OK)
    d = c.to_dict()
    assert d["partition"] == str(Partition.of([[1, 2]])) and d["target"] == "bound"
