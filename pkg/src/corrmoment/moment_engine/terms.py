"""Exact values of single expansion terms and of Gaussian trace moments.

A term of the expansion is Σ_{a in [n]^k} Π_B κ_B with the points
alpha_j = (a_j, a_{j+1}), j in B. Each block only sees the vertices its edges
touch, so it is materialized as a tensor over those vertices and the product
is contracted with einsum. When a block tensor would be too large, a few
vertices are fixed in an outer loop.
"""
from __future__ import annotations

import itertools
import math
import string
from functools import lru_cache

import numba
import numpy as np

from ..kernel import CorrelationParams, kernel_table
from ..partitions import (
    Partition,
    dihedral_orbits,
    enumerate_pairings,
    enumerate_partitions_no_singletons,
)
from ..sampler import EnsembleSpec, covariance_tensor
from .sums import (DEFAULT_COST_CAP, CostCapExceeded, CumulantSum, _kernel2, _kernel3, _kernel4,
                   _prim_product, brute_force_sum)

MAX_BLOCK_ENTRIES = 1 << 23


def delta_table(n: int, c_kappa: float = 1.0) -> np.ndarray:
    """Kernel concentrated at distance 0: the uncorrelated (Wigner-like) case."""
    g = np.zeros(2 * n + 1)
    g[0] = c_kappa
    return g


def _table(kernel: str, n: int, params: CorrelationParams) -> np.ndarray:
    if kernel == "model":
        return kernel_table(n, params.s, params.c_kappa)
    if kernel == "delta":
        return delta_table(n, params.c_kappa)
    raise ValueError(f"unknown kernel {kernel!r}")


def block_vertices(k: int, block) -> list[int]:
    return sorted({v for j in block for v in (j, j % k + 1)})


def partition_as_sum(p: Partition) -> CumulantSum:
    """The term as a CumulantSum with every vertex summed (for brute-force checks)."""
    k = p.k
    factors = tuple(tuple((f"a{j}", f"a{j % k + 1}") for j in b) for b in p.blocks)
    return CumulantSum(factors, tuple(f"a{v}" for v in range(1, k + 1)))


def term_cost(p: Partition, n: int) -> float:
    """Kernel evaluations needed by the contraction route."""
    return float(sum(n ** len(block_vertices(p.k, b)) for b in p.blocks))


@numba.njit(cache=True, inline="always")
def _advance(digits, n):
    """Odometer step; returns the lowest-order axis that moved."""
    q = digits.shape[0] - 1
    while digits[q] == n - 1:
        digits[q] = 0
        q -= 1
    digits[q] += 1
    return q


@numba.njit(cache=True, inline="always")
def _refresh(q, digits, top, u_free, u_val, v_free, v_val, lo, hi):
    for p in range(lo.shape[0]):
        if top[p] >= q:
            a = digits[u_val[p]] if u_free[p] else u_val[p]
            b = digits[v_val[p]] if v_free[p] else v_val[p]
            lo[p] = min(a, b)
            hi[p] = max(a, b)


@numba.njit(cache=True)
def _block_tensor(n, nfree, u_free, u_val, v_free, v_val, gtab, amp):
    """Tensor over the free vertices of one block. Point p uses vertex u_val[p] as a
    free axis if u_free[p] else as the fixed value u_val[p] (same for v)."""
    m = u_free.shape[0]
    total = 1
    for _ in range(nfree):
        total *= n
    out = np.empty(total)
    digits = np.zeros(max(nfree, 1), np.int64)
    lo = np.empty(m, np.int64)
    hi = np.empty(m, np.int64)
    best = np.empty(m, np.int64)
    left_idx = np.empty(m, np.int64)
    # a point is refreshed when a digit at or below its highest free axis moves
    top = np.full(m, -1, np.int64)
    for p in range(m):
        if u_free[p]:
            top[p] = max(top[p], u_val[p])
        if v_free[p]:
            top[p] = max(top[p], v_val[p])
    _refresh(-1, digits, top, u_free, u_val, v_free, v_val, lo, hi)
    # one loop per block size keeps the small kernels free of the generic path
    if m == 2:
        for flat in range(total):
            if flat:
                _refresh(_advance(digits, n), digits, top, u_free, u_val, v_free, v_val, lo, hi)
            out[flat] = _kernel2(lo, hi, 0, gtab, amp)
    elif m == 3:
        for flat in range(total):
            if flat:
                _refresh(_advance(digits, n), digits, top, u_free, u_val, v_free, v_val, lo, hi)
            out[flat] = _kernel3(lo, hi, 0, gtab, amp)
    elif m == 4:
        for flat in range(total):
            if flat:
                _refresh(_advance(digits, n), digits, top, u_free, u_val, v_free, v_val, lo, hi)
            out[flat] = _kernel4(lo, hi, 0, gtab, amp)
    else:
        for flat in range(total):
            if flat:
                _refresh(_advance(digits, n), digits, top, u_free, u_val, v_free, v_val, lo, hi)
            out[flat] = _prim_product(lo, hi, 0, m, gtab, amp, best, left_idx)
    return out


def _choose_sliced(k: int, verts: list[list[int]], n: int) -> list[int]:
    sliced: list[int] = []
    while True:
        sizes = [len([v for v in vs if v not in sliced]) for vs in verts]
        if max(n ** s for s in sizes) <= MAX_BLOCK_ENTRIES:
            return sliced
        big = max(sizes)
        counts = {}
        for vs, s in zip(verts, sizes):
            if s == big:
                for v in vs:
                    if v not in sliced:
                        counts[v] = counts.get(v, 0) + 1
        sliced.append(min(counts, key=lambda v: (-counts[v], v)))


def partition_term(p: Partition, n: int, params: CorrelationParams, kernel: str = "model",
                   cost_cap: float = DEFAULT_COST_CAP) -> float:
    k = p.k
    cost = term_cost(p, n)
    if cost > cost_cap:
        raise CostCapExceeded(cost, cost_cap)
    gtab = _table(kernel, n, params)
    verts = [block_vertices(k, b) for b in p.blocks]
    sliced = _choose_sliced(k, verts, n)
    free = [v for v in range(1, k + 1) if v not in sliced]
    letter = {v: string.ascii_letters[i] for i, v in enumerate(free)}
    plans = []
    for i, (b, vs) in enumerate(zip(p.blocks, verts)):
        fv = [v for v in vs if v not in sliced]
        others = {v for j, ws in enumerate(verts) if j != i for v in ws}
        # vertices no other block touches are summed out before contracting;
        # left in, einsum's pairwise path would carry them through every product
        private = tuple(q for q, v in enumerate(fv) if v not in others)
        kept = "".join(letter[v] for v in fv if v in others)
        plans.append((b, fv, private, kept))
    subs = ",".join(pl[3] for pl in plans) + "->"
    shapes = [np.empty((n,) * len(pl[3])) for pl in plans]
    strategy = "optimal" if len(plans) <= 5 else "greedy"
    path = np.einsum_path(subs, *shapes, optimize=strategy)[0]
    cache: dict[int, np.ndarray] = {}

    def tensor(i, fixed):
        b, fv, private, _ = plans[i]
        pos = {v: q for q, v in enumerate(fv)}
        uf, uv, vf, vv = [], [], [], []
        for j in b:
            for v, fl, vl in ((j, uf, uv), (j % k + 1, vf, vv)):
                if v in pos:
                    fl.append(True)
                    vl.append(pos[v])
                else:
                    fl.append(False)
                    vl.append(fixed[v])
        amp = 1.0 if len(b) == 2 else params.c_k(len(b))
        arr = _block_tensor(n, len(fv), np.array(uf), np.array(uv, np.int64),
                            np.array(vf), np.array(vv, np.int64), gtab, amp)
        arr = arr.reshape((n,) * len(fv))
        return arr.sum(axis=private) if private else arr

    parts = []
    for assign in itertools.product(range(n), repeat=len(sliced)):
        fixed = dict(zip(sliced, assign))
        ops = []
        for i in range(len(plans)):
            touches = any(v in fixed for v in verts[i])
            if not touches:
                if i not in cache:
                    cache[i] = tensor(i, fixed)
                ops.append(cache[i])
            else:
                ops.append(tensor(i, fixed))
        parts.append(float(np.einsum(subs, *ops, optimize=path)))
    return math.fsum(parts)


def partition_term_naive(p: Partition, n: int, params: CorrelationParams, kernel: str = "model",
                         cost_cap: float = DEFAULT_COST_CAP) -> float:
    """Plain enumeration of all n^k index tuples."""
    return brute_force_sum(partition_as_sum(p), n, params, cost_cap, gtab=_table(kernel, n, params))


def orbit_terms(k: int, n: int, params: CorrelationParams, kernel: str = "model",
                cost_cap: float = DEFAULT_COST_CAP, pairings_only: bool = False):
    """Term values for every partition, computed once per rotation/reflection orbit.

    Returns {partition: value}; partitions beyond the cost cap map to the raised error."""
    parts = enumerate_pairings(k) if pairings_only else enumerate_partitions_no_singletons(k)
    out = {}
    for rep, members in dihedral_orbits(parts).items():
        try:
            val = partition_term(rep, n, params, kernel, cost_cap)
        except CostCapExceeded as exc:
            val = exc
        for q in members:
            out[q] = val
    return out


# ---------------------------------------------------------------- Gaussian

@lru_cache(maxsize=8)
def _cov_cached(spec_json: str) -> np.ndarray:
    return covariance_tensor(EnsembleSpec.from_json(spec_json))


def pairing_wick_value(p: Partition, cov: np.ndarray) -> float:
    """Σ_a Π_{(i,j) in p} Cov(W_{a_i a_{i+1}}, W_{a_j a_{j+1}})."""
    k = p.k
    idx = string.ascii_letters
    subs = ",".join(idx[i - 1] + idx[i % k] + idx[j - 1] + idx[j % k] for i, j in p.blocks) + "->"
    return float(np.einsum(subs, *([cov] * len(p.blocks)), optimize="greedy"))


def exact_gaussian_trace_moment(n: int, k: int, spec: EnsembleSpec,
                                cost_cap: float = DEFAULT_COST_CAP) -> float:
    """E[tr H^k]/N by Wick's theorem over all pairings, H = W/sqrt(N)."""
    if k % 2:
        return 0.0
    if k == 0:
        return 1.0
    pairs = enumerate_pairings(k)
    cost = float(n) ** 4 + len(pairs) * float(n) ** (k // 2 + 2)
    if cost > cost_cap * 10:
        raise CostCapExceeded(cost, cost_cap * 10)
    cov = _cov_cached(spec.with_n(n, spec.filter_halfwidth if spec.n == n else None).to_json())
    total = math.fsum(pairing_wick_value(p, cov) for p in pairs)
    return total / float(n) ** (k / 2 + 1)
