import math

import numpy as np
import pytest

from corrmoment.kernel import CorrelationParams
from corrmoment.montecarlo import (
    NormNotConverged,
    norm_sweep,
    spectral_norm,
    trace_moment_mc,
    trace_power,
)
from corrmoment.sampler import EnsembleSpec, sample_matrix


def jacobi_eigenvalues(a, tol=1e-14):
    """Cyclic Jacobi rotations; independent of LAPACK."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(100):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2)))
        if off <= tol * max(1.0, float(np.abs(a).max())):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rp, rq = a[p].copy(), a[q].copy()
                a[p], a[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
    return np.diag(a)


def test_against_jacobi():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(2, 51))
        m = rng.standard_normal((n, n))
        if trial % 3 == 0:
            m = m + 3 * np.eye(n)  # push the spectrum one-sided
        m = (m + m.T) / 2
        ref = float(np.abs(jacobi_eigenvalues(m)).max())
        got = spectral_norm(m).value
        assert got == pytest.approx(ref, rel=1e-6), (trial, n)


def test_small_examples():
    assert spectral_norm(np.diag([3.0, -5.0, 1.0])).value == pytest.approx(5.0)
    assert spectral_norm(np.eye(40)).value == pytest.approx(1.0)
    big = np.diag(np.r_[np.linspace(-1, 1, 39), -7.0])
    assert spectral_norm(big).value == pytest.approx(7.0)


def test_norm_dominates_entries():
    for n in (10, 30):
        h = sample_matrix(EnsembleSpec(CorrelationParams(n), seed=1), 0).h
        est = spectral_norm(h)
        assert est.value >= abs(h[0, 0]) and est.value >= np.abs(np.diag(h)).max()
        assert est.residual <= 1e-8


def test_not_converged_carries_best():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((60, 60))
    m = m + m.T
    with pytest.raises(NormNotConverged) as exc:
        spectral_norm(m, tol=1e-300)
    assert exc.value.best.value > 0
    assert "did not converge" in str(exc.value)


def test_trace_power():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((9, 9))
    m = m + m.T
    ev = np.linalg.eigvalsh(m)
    for k in range(7):
        assert trace_power(m, k) == pytest.approx(float(np.sum(ev ** k)), rel=1e-10, abs=1e-9)


def test_trace_moment_mc():
    sp = EnsembleSpec(CorrelationParams(20), "wigner", seed=4)
    mean, se = trace_moment_mc(sp, 2, 200)
    assert abs(mean - (1 + 1 / 20)) <= 4 * se
    assert trace_moment_mc(sp, 2, 50) == trace_moment_mc(sp, 2, 50)
    with pytest.raises(ValueError):
        trace_moment_mc(sp, 2, 1)


def test_sweep_validation():
    sp = EnsembleSpec(CorrelationParams(8))
    with pytest.raises(ValueError, match="grid needs >= 3 points"):
        norm_sweep(sp, [8, 16], 4, 0.25)
    with pytest.raises(ValueError, match="strictly increasing"):
        norm_sweep(sp, [8, 16, 16], 4, 0.25)
    with pytest.raises(ValueError):
        norm_sweep(sp, [8, 16, 32], 1, 0.25)


def test_sweep_deterministic_and_threads():
    sp = EnsembleSpec(CorrelationParams(8), "wigner", seed=9)
    a = norm_sweep(sp, [8, 16, 32], 12, 0.25, moment_orders=(2,), threads=1)
    b = norm_sweep(sp, [8, 16, 32], 12, 0.25, moment_orders=(2,), threads=3)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    rows = a.to_csv().splitlines()
    assert rows[0] == "n,statistic,value,stderr"
    assert len(rows) == 1 + 3 * 5
    p = a.per_n[-1]
    assert p.max_norm >= p.median_norm > 0
    assert 0 <= p.tail_fraction <= 1 and p.tail_stderr > 0
