"""Spectral norms, trace moments and norm sweeps over a size grid."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .moment_engine.fit import loglog_slope
from .sampler import EnsembleSpec, MatrixSample, sample_matrix, sample_rng

DENSE_CUTOFF = 16


class NormNotConverged(RuntimeError):
    def __init__(self, best: "NormEstimate"):
        super().__init__(f"norm iteration did not converge (best {best.value}, residual {best.residual})")
        self.best = best


@dataclass
class NormEstimate:
    n: int
    value: float
    iterations: int
    residual: float


def thread_count() -> int:
    env = os.environ.get("CORRMOMENT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _as_array(m) -> np.ndarray:
    return m.h if isinstance(m, MatrixSample) else np.asarray(m, dtype=float)


def _lanczos(h: np.ndarray, v0: np.ndarray, tol: float):
    counter = {"n": 0}

    def mv(x):
        counter["n"] += 1
        return h @ x

    from scipy.sparse.linalg import LinearOperator
    op = LinearOperator(h.shape, matvec=mv, dtype=float)
    try:
        vals, vecs = eigsh(op, k=1, which="LM", v0=v0, tol=tol * 1e-2, maxiter=50 * h.shape[0])
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            return 0.0, v0, counter["n"]
        vals, vecs = exc.eigenvalues, exc.eigenvectors
    return float(vals[0]), vecs[:, 0], counter["n"]


def spectral_norm(m, tol: float = 1e-8, seed: int = 0) -> NormEstimate:
    """Largest absolute eigenvalue of a symmetric matrix.

    Lanczos from the alternating vector (+-1/sqrt(N)), then once more from a seeded
    random vector; the larger result wins. Tiny matrices go to the dense solver.
    """
    h = _as_array(m)
    n = h.shape[0]
    if n <= DENSE_CUTOFF:
        ev = eigvalsh(h)
        lam = ev[0] if abs(ev[0]) > abs(ev[-1]) else ev[-1]
        return NormEstimate(n, float(abs(lam)), 1, 0.0)
    v_alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) / math.sqrt(n)
    v_rnd = sample_rng(seed, n).standard_normal(n)
    best = None
    iters = 0
    for v0 in (v_alt, v_rnd):
        lam, vec, it = _lanczos(h, v0, tol)
        iters += it
        nv = float(np.linalg.norm(vec))
        res = float(np.linalg.norm(h @ vec - lam * vec)) / max(abs(lam) * nv, 1e-300)
        cand = NormEstimate(n, abs(lam), iters, res)
        if best is None or cand.value > best.value:
            best = cand
    best.iterations = iters
    if not best.residual <= tol:
        raise NormNotConverged(best)
    return best


def trace_power(h: np.ndarray, k: int) -> float:
    """tr(h^k) by repeated squaring of matrix products."""
    if k == 0:
        return float(h.shape[0])
    if k == 1:
        return float(np.trace(h))
    half = np.linalg.matrix_power(h, k // 2)
    if k % 2 == 0:
        return float(np.sum(half * half.T))
    return float(np.sum((half @ h) * half.T))


def _parallel_map(fn, items, threads=None):
    threads = threads or thread_count()
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean_stderr(values) -> tuple[float, float]:
    vals = np.asarray(values, dtype=float)
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, 0.0
    var = math.fsum((vals - mean) ** 2) / (len(vals) - 1)
    return mean, math.sqrt(var / len(vals))


def trace_moment_mc(spec: EnsembleSpec, k: int, num_samples: int, start_index: int = 0
                    ) -> tuple[float, float]:
    """Monte Carlo estimate of E[tr H^k]/N and its standard error."""
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    n = spec.n
    vals = _parallel_map(lambda i: trace_power(sample_matrix(spec, i).h, k) / n,
                         list(range(start_index, start_index + num_samples)))
    return _mean_stderr(vals)


@dataclass
class SweepPoint:
    n: int
    median_norm: float
    mean_norm: float
    median_stderr: float
    mean_stderr: float
    tail_fraction: float
    tail_stderr: float
    max_norm: float
    trace_moments: dict = field(default_factory=dict)
    trace_moment_stderr: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["trace_moments"] = {str(k): v for k, v in self.trace_moments.items()}
        d["trace_moment_stderr"] = {str(k): v for k, v in self.trace_moment_stderr.items()}
        return d


@dataclass
class SweepResult:
    n_grid: list
    per_n: list
    slope_norm: float
    slope_stderr: float
    seed: int
    num_samples: int
    epsilon: float
    spec: dict

    def to_dict(self) -> dict:
        return {"n_grid": list(self.n_grid), "per_n": [p.to_dict() for p in self.per_n],
                "slope_norm": self.slope_norm, "slope_stderr": self.slope_stderr,
                "seed": self.seed, "num_samples": self.num_samples,
                "epsilon": self.epsilon, "spec": self.spec}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "statistic", "value", "stderr"])
        for p in self.per_n:
            wr.writerow([p.n, "median_norm", repr(p.median_norm), repr(p.median_stderr)])
            wr.writerow([p.n, "mean_norm", repr(p.mean_norm), repr(p.mean_stderr)])
            wr.writerow([p.n, f"tail_fraction_eps={self.epsilon!r}", repr(p.tail_fraction),
                         repr(p.tail_stderr)])
            wr.writerow([p.n, "max_norm", repr(p.max_norm), ""])
            for k in sorted(p.trace_moments):
                wr.writerow([p.n, f"trace_moment_k={k}", repr(p.trace_moments[k]),
                             repr(p.trace_moment_stderr[k])])
        return buf.getvalue()


def norm_sweep(template: EnsembleSpec, n_grid, num_samples: int, epsilon: float,
               moment_orders=(), tol: float = 1e-8, halfwidth: int | None = None,
               threads: int | None = None) -> SweepResult:
    grid = [int(n) for n in n_grid]
    if len(grid) < 3:
        raise ValueError("grid needs >= 3 points")
    if sorted(set(grid)) != grid:
        raise ValueError("grid must be strictly increasing")
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    per_n = []
    for n in grid:
        spec = template.with_n(n, halfwidth)

        def one(i, spec=spec):
            s = sample_matrix(spec, i)
            norm = spectral_norm(s, tol, seed=spec.seed ^ (i + 1)).value
            moments = [trace_power(s.h, k) / n for k in moment_orders]
            return norm, moments

        res = _parallel_map(one, list(range(num_samples)), threads)
        norms = np.array([r[0] for r in res])
        mean, mean_se = _mean_stderr(norms)
        sd = float(np.std(norms, ddof=1))
        tail = float(np.mean(norms > n ** epsilon))
        # binomial stderr, floored so an empty tail still reports its resolution
        tail_se = math.sqrt(max(tail * (1 - tail), 1.0 / num_samples) / num_samples)
        tm, tms = {}, {}
        for j, k in enumerate(moment_orders):
            tm[k], tms[k] = _mean_stderr([r[1][j] for r in res])
        per_n.append(SweepPoint(n, float(np.median(norms)), mean,
                                1.2533 * sd / math.sqrt(num_samples), mean_se,
                                tail, tail_se, float(norms.max()), tm, tms))
    slope, slope_se = loglog_slope(grid, [p.median_norm for p in per_n])
    return SweepResult(grid, per_n, slope, slope_se, int(template.seed), num_samples,
                       float(epsilon), template.to_dict())
