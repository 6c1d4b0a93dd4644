import itertools
import math

import numpy as np
import pytest

from corrmoment.kernel import CorrelationParams, block_value
from corrmoment.moment_engine import (
    CostCapExceeded,
    CumulantSum,
    brute_force_sum,
    estimate_cumulant_sum,
    oracle_cumulant_sum,
    oracle_exponent_fit,
)
from corrmoment.moment_engine.fit import loglog_slope
from corrmoment.moment_engine.sums import exact_pair_sum, labelled_trees, probe_vector


def python_sum(term, n, params):
    """Straight loops over every assignment with the reference block kernel."""
    weights = term.weights(n)
    names = term.variables
    supp = [np.nonzero(weights[v])[0] for v in names]
    total = []
    for combo in itertools.product(*supp):
        val = dict(zip(names, (int(c) + 1 for c in combo)))
        w = math.prod(weights[v][c] for v, c in zip(names, combo))
        for f in term.factors:
            w *= block_value([(val[a], val[b]) for a, b in f], params)
        total.append(w)
    return math.fsum(total)


CASES = [
    ("a1 a2 | a3 a4", "a1 a3", {}),
    ("a1 a2 | a3 a4", "a1 a2 a3", {}),
    ("x a2 | a3 a4", "a2 a3", {"x": "uniform"}),
    ("x a2 | y a4", "a2", {"x": "onehot", "y": "uniform"}),
    ("a1 a2 | a3 a4 | a5 a6", "a1 a3 a5", {}),
    ("a1 a2 | a2 a3 | a3 a1", "a1 a2 a3", {}),
    ("a1 a2 | a3 a4 ; a3 a5 | a5 a1", "a1 a3 a5", {}),
    ("a1 a2 | a3 a4 | a5 a6 | a7 a8", "a1 a3 a5 a7", {}),
    ("a1 a2 | a2 a3 | a3 a4 | a4 a1 | a1 a3", "a1 a2 a3 a4", {}),
]


@pytest.mark.parametrize("text,summed,vecs", CASES)
def test_brute_force_matches_python(text, summed, vecs):
    n = 7
    P = CorrelationParams(n, c_k_table={3: 1.7, 4: 0.4, 5: 2.0})
    term = CumulantSum.parse(text, summed, vectors=vecs)
    assert brute_force_sum(term, n, P) == pytest.approx(python_sum(term, n, P), rel=1e-12)


def test_fixed_positions():
    P = CorrelationParams(9)
    for rule in ("center", "first", "last", 3):
        term = CumulantSum.parse("a1 a2 | a3 a4", "a1 a3", fixed={"a2": rule, "a4": rule})
        assert brute_force_sum(term, 9, P) == pytest.approx(python_sum(term, 9, P))
    with pytest.raises(ValueError):
        CumulantSum.parse("a1 a2 | a3 a4", "a1", fixed={"a2": 40}).weights(9)


def test_exact_fold_matches_brute():
    for n in (5, 8, 13):
        P = CorrelationParams(n, s=2.5, c_kappa=0.8)
        for summed, vecs in (("a1 a2 a3 a4", {}), ("a2 a3", {"x": "uniform"}), ("a1 a3", {}),
                             ("a2 a4", {"x": "onehot", "y": "uniform"})):
            text = "x a2 | y a4" if "y" in vecs else ("x a2 | a3 a4" if vecs else "a1 a2 | a3 a4")
            term = CumulantSum.parse(text, summed, vectors=vecs)
            assert exact_pair_sum(term, n, P) == pytest.approx(brute_force_sum(term, n, P), rel=1e-10)


def test_cost_cap():
    term = CumulantSum.parse("a1 a2 | a3 a4 | a5 a6", "a1 a2 a3 a4 a5 a6")
    with pytest.raises(CostCapExceeded) as exc:
        oracle_cumulant_sum(term, 50, CorrelationParams(50), cost_cap=1e6)
    assert exc.value.estimate == 50.0 ** 6
    assert "exceeds cap" in str(exc.value)


def test_single_sum_converges():
    term = CumulantSum.parse("a1 a2 | a3 a4", "a1")
    v200 = oracle_cumulant_sum(term, 200, CorrelationParams(200))
    v400 = oracle_cumulant_sum(term, 400, CorrelationParams(400))
    assert abs(v400 - v200) < 0.01 * v200


def test_double_sum_grows_linearly():
    term = CumulantSum.parse("a1 a2 | a3 a4", "a1 a3")
    slope, _ = oracle_exponent_fit(term, [50, 100, 200], CorrelationParams(50))
    assert slope == pytest.approx(1.0, abs=0.15)


def test_fit_flat_and_errors():
    slope, se = loglog_slope([10, 20, 40], [3.0, 3.0, 3.0])
    assert slope == pytest.approx(0.0, abs=1e-12) and se == pytest.approx(0.0, abs=1e-12)
    slope, _ = loglog_slope([10, 20, 40, 80], [n ** 1.5 for n in (10, 20, 40, 80)])
    assert slope == pytest.approx(1.5)
    with pytest.raises(ValueError):
        loglog_slope([10, 20, 40], [1.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        oracle_exponent_fit(lambda n: 1.0, [10, 20], CorrelationParams(10))


def test_probe_vectors_unit():
    for kind in ("uniform", "onehot"):
        assert np.linalg.norm(probe_vector(kind, 17)) == pytest.approx(1.0)


def test_labelled_trees():
    for m in range(2, 6):
        trees = labelled_trees(m)
        assert len(trees) == m ** (m - 2)
        assert len(set(trees)) == len(trees)


@pytest.mark.parametrize("text,summed", [
    ("a1 a2 | a3 a4 | a5 a6", "a1 a2 a3 a4 a5 a6"),
    ("x a2 | a3 a4 | a5 a6", "a2 a3 a4 a5 a6"),
    ("a1 a2 | a3 a4 | a5 a6 | a7 a8", "a1 a2 a3 a4 a5 a6 a7 a8"),
])
def test_tree_mixture_unbiased(text, summed):
    """Importance sampling forced on a size where brute force is still possible."""
    n = 9
    P = CorrelationParams(n)
    term = CumulantSum.parse(text, summed, vectors={"x": "uniform"} if "x" in text else {})
    exact = brute_force_sum(term, n, P)
    est = estimate_cumulant_sum(term, n, P, samples=20000, seed=3, cost_cap=1.0)
    assert est.method == "tree-mixture"
    assert abs(est.value - exact) <= 4 * est.stderr
    assert est.stderr < 0.05 * exact


def test_tree_mixture_seeded():
    term = CumulantSum.parse("a1 a2 | a3 a4 | a5 a6", "a1 a2 a3 a4 a5 a6")
    P = CorrelationParams(30)
    a = estimate_cumulant_sum(term, 30, P, samples=500, seed=7, cost_cap=1.0)
    b = estimate_cumulant_sum(term, 30, P, samples=500, seed=7, cost_cap=1.0)
    c = estimate_cumulant_sum(term, 30, P, samples=500, seed=8, cost_cap=1.0)
    assert a == b and a.value != c.value


def test_estimate_routes():
    P = CorrelationParams(10)
    assert estimate_cumulant_sum(CumulantSum.parse("a1 a2 | a3 a4", "a1"), 10, P).method == "exact-fold"
    t = CumulantSum.parse("a1 a2 | a2 a3 | a3 a1", "a1 a2 a3")
    assert estimate_cumulant_sum(t, 10, P).method == "brute"
