"""Numeric oracles for index sums of cumulant-kernel products.

A sum is described by a `CumulantSum`: factors (one per cumulant block) whose
points are pairs of named variables, and for every variable whether it is
summed over 1..n, held fixed, or contracted against a probe vector.

Three evaluation routes:

* brute force over all variable assignments (numba), subject to a cost cap;
* for a single two-point factor with distinct variables, an exact route that
  uses d(p, q) = |sort(p) - sort(q)|_1: folding each point onto the triangle
  i <= j turns the sum into a translation-invariant convolution;
* `estimate_cumulant_sum`, importance sampling from the mixture of all
  spanning-tree products, whose normalizer is computed exactly by the same
  convolutions. The MST product over the mixture density lies in [1/tau, 1]
  with tau the number of labelled trees, so the estimator is well behaved.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.signal import fftconvolve

from ..kernel import CorrelationParams, kernel_table

DEFAULT_COST_CAP = 10**9


class CostCapExceeded(RuntimeError):
    def __init__(self, estimate: float, cap: float):
        super().__init__(f"estimated cost {estimate:.3g} kernel evaluations exceeds cap {cap:.3g}")
        self.estimate = estimate
        self.cap = cap


def _fixed_position(rule, n: int) -> int:
    if isinstance(rule, (int, np.integer)):
        pos = int(rule)
    elif rule == "center":
        pos = (n + 1) // 2
    elif rule == "first":
        pos = 1
    elif rule == "last":
        pos = n
    else:
        raise ValueError(f"unknown fixed-index rule {rule!r}")
    if not 1 <= pos <= n:
        raise ValueError(f"fixed index {pos} outside 1..{n}")
    return pos


def probe_vector(kind: str, n: int) -> np.ndarray:
    """Nonnegative unit probe vectors; nonnegativity lets |Σ x κ| drop the modulus."""
    if kind == "uniform":
        return np.full(n, 1.0 / math.sqrt(n))
    if kind == "onehot":
        x = np.zeros(n)
        x[(n + 1) // 2 - 1] = 1.0
        return x
    raise ValueError(f"unknown probe vector {kind!r}")


@dataclass(frozen=True)
class CumulantSum:
    """Σ over the summed variables of Π weights · Π factors.

    factors: each factor is a tuple of points, each point a pair of variable names.
    Variables not listed as summed or vector are fixed; `fixed` may position them
    ("center", "first", "last" or a 1-based index), default "center".
    """
    factors: tuple
    summed: tuple = ()
    fixed: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    name: str = ""

    @classmethod
    def parse(cls, text: str, summed: str = "", vectors: dict | None = None,
              fixed: dict | None = None, name: str = "") -> "CumulantSum":
        """Factors separated by ';', points by '|', e.g. "x a2 | a3 a4 ; a5 a6 | a7 a8"."""
        factors = []
        for ftxt in text.split(";"):
            pts = []
            for ptxt in ftxt.split("|"):
                names = ptxt.split()
                if len(names) != 2:
                    raise ValueError(f"point {ptxt!r} needs two variables")
                pts.append(tuple(names))
            if len(pts) < 2:
                raise ValueError("a cumulant factor needs at least two points")
            factors.append(tuple(pts))
        return cls(tuple(factors), tuple(summed.split()), dict(fixed or {}), dict(vectors or {}), name)

    @property
    def variables(self) -> list[str]:
        seen = []
        for f in self.factors:
            for pt in f:
                for v in pt:
                    if v not in seen:
                        seen.append(v)
        return seen

    def role(self, var: str) -> str:
        if var in self.summed:
            return "summed"
        if var in self.vectors:
            return "vector"
        return "fixed"

    def weights(self, n: int) -> dict[str, np.ndarray]:
        out = {}
        for v in self.variables:
            r = self.role(v)
            if r == "summed":
                out[v] = np.ones(n)
            elif r == "vector":
                out[v] = probe_vector(self.vectors[v], n)
            else:
                w = np.zeros(n)
                w[_fixed_position(self.fixed.get(v, "center"), n) - 1] = 1.0
                out[v] = w
        return out

    def distinct_points(self) -> bool:
        """True for one factor whose points use pairwise distinct variables."""
        if len(self.factors) != 1:
            return False
        names = [v for pt in self.factors[0] for v in pt]
        return len(set(names)) == len(names)

    def brute_cost(self, n: int) -> float:
        cost = 1.0
        for w in self.weights(n).values():
            cost *= int(np.count_nonzero(w))
        return cost


# ---------------------------------------------------------------- brute force

@numba.njit(cache=True)
def _prim_product(lo, hi, start, m, gtab, amp, best, left_idx):
    # Prim on distances (the MST maximizes the product of the decreasing kernel).
    # Unattached points stay packed in the first `left` slots; the argmin runs on
    # keys best * 64 + slot so that it needs no branches either
    for a in range(1, m):
        best[a - 1] = abs(lo[start] - lo[start + a]) + abs(hi[start] - hi[start + a])
        left_idx[a - 1] = start + a
    left = m - 1
    prod = amp
    while left > 0:
        key = best[0] * 64
        for a in range(1, left):
            key = min(key, best[a] * 64 + a)
        sel = key & 63
        prod *= gtab[best[sel]]
        p = left_idx[sel]
        left -= 1
        best[sel] = best[left]
        left_idx[sel] = left_idx[left]
        lp = lo[p]
        hp = hi[p]
        for a in range(left):
            q = left_idx[a]
            best[a] = min(best[a], abs(lp - lo[q]) + abs(hp - hi[q]))
    return prod


@numba.njit(cache=True, inline="always")
def _kernel2(lo, hi, start, gtab, amp):
    return amp * gtab[abs(lo[start] - lo[start + 1]) + abs(hi[start] - hi[start + 1])]


@numba.njit(cache=True, inline="always")
def _kernel3(lo, hi, start, gtab, amp):
    # a triangle has three spanning trees; keep the heaviest. Branch-free on
    # purpose: data-dependent branches here mispredict on almost every call
    g01 = gtab[abs(lo[start] - lo[start + 1]) + abs(hi[start] - hi[start + 1])]
    g02 = gtab[abs(lo[start] - lo[start + 2]) + abs(hi[start] - hi[start + 2])]
    g12 = gtab[abs(lo[start + 1] - lo[start + 2]) + abs(hi[start + 1] - hi[start + 2])]
    return amp * max(g01 * g02, max(g01 * g12, g02 * g12))


@numba.njit(cache=True, inline="always")
def _kernel4(lo, hi, start, gtab, amp):
    # all 16 spanning trees of four points: 4 stars and 12 paths
    s0, s1, s2, s3 = start, start + 1, start + 2, start + 3
    g01 = gtab[abs(lo[s0] - lo[s1]) + abs(hi[s0] - hi[s1])]
    g02 = gtab[abs(lo[s0] - lo[s2]) + abs(hi[s0] - hi[s2])]
    g03 = gtab[abs(lo[s0] - lo[s3]) + abs(hi[s0] - hi[s3])]
    g12 = gtab[abs(lo[s1] - lo[s2]) + abs(hi[s1] - hi[s2])]
    g13 = gtab[abs(lo[s1] - lo[s3]) + abs(hi[s1] - hi[s3])]
    g23 = gtab[abs(lo[s2] - lo[s3]) + abs(hi[s2] - hi[s3])]
    stars = max(max(g01 * g02 * g03, g01 * g12 * g13), max(g02 * g12 * g23, g03 * g13 * g23))
    p1 = max(max(g01 * g12 * g23, g02 * g12 * g13), max(g01 * g13 * g23, g03 * g13 * g12))
    p2 = max(max(g02 * g23 * g13, g03 * g23 * g12), max(g01 * g02 * g23, g12 * g02 * g03))
    p3 = max(max(g01 * g03 * g23, g13 * g03 * g02), max(g02 * g01 * g13, g12 * g01 * g03))
    return amp * max(max(stars, p1), max(p2, p3))


@numba.njit(cache=True, inline="always")
def _factor_value(lo, hi, start, stop, gtab, amp, best, left_idx):
    """Kernel of one block: g(d) for two points, amp * Π g over the MST otherwise.
    `best` and `left_idx` (int64) are scratch arrays of length >= stop - start;
    at most 64 points.

    Hot loops should not call this with a size only known at run time: keeping
    the generic branch in the loop body makes the small cases several times
    slower. Callers specialize their loops on the block size instead."""
    m = stop - start
    if m == 2:
        return _kernel2(lo, hi, start, gtab, amp)
    if m == 3:
        return _kernel3(lo, hi, start, gtab, amp)
    if m == 4:
        return _kernel4(lo, hi, start, gtab, amp)
    return _prim_product(lo, hi, start, m, gtab, amp, best, left_idx)


@numba.njit(cache=True, inline="always")
def _load(ctr, sup_idx, sup_w, pt_u, pt_v, val, lo, hi):
    """Index values and weight of the current assignment."""
    w = 1.0
    for v in range(ctr.shape[0]):
        val[v] = sup_idx[v, ctr[v]]
        w *= sup_w[v, ctr[v]]
    for p in range(pt_u.shape[0]):
        a = val[pt_u[p]]
        b = val[pt_v[p]]
        lo[p] = min(a, b)
        hi[p] = max(a, b)
    return w


@numba.njit(cache=True, inline="always")
def _step(ctr, sup_len):
    """Mixed-radix step over variables 1..; False once they wrap around."""
    v = ctr.shape[0] - 1
    while v >= 1:
        ctr[v] += 1
        if ctr[v] < sup_len[v]:
            return True
        ctr[v] = 0
        v -= 1
    return False


@numba.njit(cache=True)
def _brute_sum(sup_idx, sup_w, sup_len, pt_u, pt_v, fac_start, fac_amp, gtab):
    """Per value of the first variable, the sum over all the others."""
    nvar = sup_len.shape[0]
    npt = pt_u.shape[0]
    nfac = fac_amp.shape[0]
    pairs_only = 2 * nfac == npt
    for f in range(nfac):
        pairs_only = pairs_only and fac_start[f + 1] - fac_start[f] == 2
    single = npt if nfac == 1 else 0
    partial = np.zeros(sup_len[0])
    ctr = np.zeros(nvar, np.int64)
    val = np.empty(nvar, np.int64)
    lo = np.empty(npt, np.int64)
    hi = np.empty(npt, np.int64)
    best = np.empty(npt, np.int64)
    left_idx = np.empty(npt, np.int64)
    # separate loops per shape: see _factor_value on why the generic path stays out
    for o in range(sup_len[0]):
        ctr[:] = 0
        ctr[0] = o
        acc = 0.0
        if pairs_only:
            while True:
                term = _load(ctr, sup_idx, sup_w, pt_u, pt_v, val, lo, hi)
                for f in range(nfac):
                    term *= _kernel2(lo, hi, 2 * f, gtab, fac_amp[f])
                acc += term
                if not _step(ctr, sup_len):
                    break
        elif single == 3:
            while True:
                w = _load(ctr, sup_idx, sup_w, pt_u, pt_v, val, lo, hi)
                acc += w * _kernel3(lo, hi, 0, gtab, fac_amp[0])
                if not _step(ctr, sup_len):
                    break
        elif single == 4:
            while True:
                w = _load(ctr, sup_idx, sup_w, pt_u, pt_v, val, lo, hi)
                acc += w * _kernel4(lo, hi, 0, gtab, fac_amp[0])
                if not _step(ctr, sup_len):
                    break
        else:
            while True:
                term = _load(ctr, sup_idx, sup_w, pt_u, pt_v, val, lo, hi)
                for f in range(nfac):
                    term *= _factor_value(lo, hi, fac_start[f], fac_start[f + 1], gtab,
                                          fac_amp[f], best, left_idx)
                acc += term
                if not _step(ctr, sup_len):
                    break
        partial[o] = acc
    return partial


def _compile(term: CumulantSum, n: int, params: CorrelationParams, gtab=None):
    names = term.variables
    weights = term.weights(n)
    idx = {v: i for i, v in enumerate(names)}
    sups = []
    for v in names:
        nz = np.nonzero(weights[v])[0]
        sups.append((nz + 1, weights[v][nz]))
    width = max(len(s[0]) for s in sups)
    sup_idx = np.zeros((len(names), width), np.int64)
    sup_w = np.zeros((len(names), width))
    sup_len = np.zeros(len(names), np.int64)
    for i, (ix, w) in enumerate(sups):
        sup_idx[i, :len(ix)] = ix
        sup_w[i, :len(ix)] = w
        sup_len[i] = len(ix)
    pt_u, pt_v, starts, amps = [], [], [0], []
    for f in term.factors:
        for a, b in f:
            pt_u.append(idx[a])
            pt_v.append(idx[b])
        starts.append(len(pt_u))
        amps.append(1.0 if len(f) == 2 else params.c_k(len(f)))
    if gtab is None:
        gtab = kernel_table(n, params.s, params.c_kappa)
    return (sup_idx, sup_w, sup_len, np.array(pt_u, np.int64), np.array(pt_v, np.int64),
            np.array(starts, np.int64), np.array(amps), np.asarray(gtab, np.float64))


def brute_force_sum(term: CumulantSum, n: int, params: CorrelationParams,
                    cost_cap: float = DEFAULT_COST_CAP, gtab=None) -> float:
    cost = term.brute_cost(n)
    if cost > cost_cap:
        raise CostCapExceeded(cost, cost_cap)
    return math.fsum(_brute_sum(*_compile(term, n, params, gtab)))


# ------------------------------------------------------- folded point kernels

def folded_weight(wu: np.ndarray, wv: np.ndarray) -> np.ndarray:
    """Weight of the point (a, b) moved onto the triangle a <= b."""
    w = np.outer(wu, wv)
    return np.triu(w + w.T, 1) + np.diag(np.diag(w))


def _conv_kernel(n: int, gtab: np.ndarray) -> np.ndarray:
    r = np.arange(-(n - 1), n)
    return gtab[np.abs(r)[:, None] + np.abs(r)[None, :]]


class _Convolver:
    def __init__(self, n, gtab):
        self.n = n
        self.kern = _conv_kernel(n, gtab)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        out = fftconvolve(v, self.kern, mode="full")[n - 1:2 * n - 1, n - 1:2 * n - 1]
        return np.maximum(out, 0.0)


def _folded_points(term: CumulantSum, n: int):
    w = term.weights(n)
    return [folded_weight(w[a], w[b]) for a, b in term.factors[0]]


def exact_pair_sum(term: CumulantSum, n: int, params: CorrelationParams) -> float:
    """Single two-point factor with distinct variables, evaluated by one convolution."""
    if not term.distinct_points() or len(term.factors[0]) != 2:
        raise ValueError("exact_pair_sum needs one two-point factor with distinct variables")
    gtab = kernel_table(n, params.s, params.c_kappa)
    w1, w2 = _folded_points(term, n)
    conv = _Convolver(n, gtab)
    return math.fsum((w1 * conv(w2)).ravel())


def oracle_cumulant_sum(term: CumulantSum, n: int, params: CorrelationParams,
                        cost_cap: float = DEFAULT_COST_CAP) -> float:
    """Exact value of the sum; raises CostCapExceeded when brute force is too large."""
    if term.distinct_points() and len(term.factors[0]) == 2:
        return exact_pair_sum(term, n, params)
    return brute_force_sum(term, n, params, cost_cap)


# ---------------------------------------------------- tree-mixture sampling

def labelled_trees(m: int) -> list[tuple[tuple[int, int], ...]]:
    """All m^(m-2) labelled trees on m vertices, decoded from Pruefer sequences."""
    if m == 2:
        return [((0, 1),)]
    trees = []
    for seq in itertools.product(range(m), repeat=m - 2):
        degree = [1] * m
        for x in seq:
            degree[x] += 1
        edges = []
        for x in seq:
            leaf = min(i for i in range(m) if degree[i] == 1)
            edges.append(tuple(sorted((leaf, x))))
            degree[leaf] -= 1
            degree[x] -= 1
        u, v = [i for i in range(m) if degree[i] == 1]
        edges.append((u, v))
        trees.append(tuple(sorted(edges)))
    return trees


def _children(tree, root=0):
    adj = {}
    for a, b in tree:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    order, parent, kids = [root], {root: None}, {}
    for node in order:
        kids[node] = [c for c in adj.get(node, []) if c != parent[node]]
        for c in kids[node]:
            parent[c] = node
            order.append(c)
    return order, parent, kids


@numba.njit(cache=True)
def _draw_near(ps1, ps2, base, gtab, u):
    """For each parent location draw a child location t with probability
    proportional to base[t] * g(|parent - t|_1)."""
    n = base.shape[0]
    out = np.empty(ps1.shape[0], np.int64)
    for s in range(ps1.shape[0]):
        total = 0.0
        for i in range(n):
            di = abs(ps1[s] - i)
            for j in range(i, n):
                b = base[i, j]
                if b > 0.0:
                    total += b * gtab[di + abs(ps2[s] - j)]
        target = u[s] * total
        acc = 0.0
        last = -1
        done = False
        for i in range(n):
            di = abs(ps1[s] - i)
            for j in range(i, n):
                b = base[i, j]
                if b > 0.0:
                    acc += b * gtab[di + abs(ps2[s] - j)]
                    last = i * n + j
                    if acc >= target:
                        done = True
                        break
            if done:
                break
        out[s] = last
    return out


@numba.njit(cache=True)
def _tree_ratios(c1, c2, trees, gtab):
    """MST product over the sum of products over all labelled trees, per sample."""
    ns, m = c1.shape
    out = np.empty(ns)
    lo = np.empty(m, np.int64)
    hi = np.empty(m, np.int64)
    best = np.empty(m, np.int64)
    used = np.empty(m, np.int64)
    for s in range(ns):
        for a in range(m):
            lo[a] = c1[s, a]
            hi[a] = c2[s, a]
        f = _factor_value(lo, hi, 0, m, gtab, 1.0, best, used)
        q = 0.0
        for t in range(trees.shape[0]):
            prod = 1.0
            for e in range(trees.shape[1]):
                a = trees[t, e, 0]
                b = trees[t, e, 1]
                prod *= gtab[abs(lo[a] - lo[b]) + abs(hi[a] - hi[b])]
            q += prod
        out[s] = f / q
    return out


@dataclass
class SumEstimate:
    value: float
    stderr: float
    method: str
    samples: int = 0


def estimate_cumulant_sum(term: CumulantSum, n: int, params: CorrelationParams,
                          samples: int = 4000, seed: int = 0,
                          cost_cap: float = DEFAULT_COST_CAP) -> SumEstimate:
    """Exact when affordable, otherwise the tree-mixture importance-sampling estimate."""
    if term.distinct_points() and len(term.factors[0]) == 2:
        return SumEstimate(exact_pair_sum(term, n, params), 0.0, "exact-fold")
    if term.brute_cost(n) <= cost_cap or not term.distinct_points():
        return SumEstimate(brute_force_sum(term, n, params, cost_cap), 0.0, "brute")
    return _tree_mixture(term, n, params, samples, seed)


def _tree_mixture(term, n, params, samples, seed) -> SumEstimate:
    m = len(term.factors[0])
    gtab = kernel_table(n, params.s, params.c_kappa)
    conv = _Convolver(n, gtab)
    pts = _folded_points(term, n)
    trees = labelled_trees(m)
    memo = {}

    def message(c, parent, kids):
        key = (c, parent, tuple(sorted(_subtree_edges(c, kids))))
        if key not in memo:
            memo[key] = conv(_base(c, kids))
        return memo[key]

    def _subtree_edges(c, kids):
        out = []
        for g in kids[c]:
            out.append((c, g))
            out += _subtree_edges(g, kids)
        return out

    def _base(c, kids):
        b = pts[c].copy()
        for g in kids[c]:
            b *= message(g, c, kids)
        return b

    layouts, zs = [], []
    for tree in trees:
        order, parent, kids = _children(tree)
        root_w = _base(0, kids)
        layouts.append((order, parent, kids, root_w))
        zs.append(math.fsum(root_w.ravel()))
    z_tot = math.fsum(zs)
    if z_tot <= 0:
        return SumEstimate(0.0, 0.0, "tree-mixture", samples)
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, m]))
    counts = rng.multinomial(samples, np.array(zs) / z_tot)
    tree_arr = np.array(trees, np.int64)
    c1 = np.empty((samples, m), np.int64)
    c2 = np.empty((samples, m), np.int64)
    row = 0
    for (order, parent, kids, root_w), cnt in zip(layouts, counts):
        if cnt == 0:
            continue
        sl = slice(row, row + cnt)
        cdf = np.cumsum(root_w.ravel())
        flat = np.searchsorted(cdf, rng.random(cnt) * cdf[-1], side="right")
        flat = np.minimum(flat, n * n - 1)
        c1[sl, 0], c2[sl, 0] = np.divmod(flat, n)
        for node in order[1:]:
            par = parent[node]
            base = _base(node, kids)
            got = _draw_near(c1[sl, par], c2[sl, par], base, gtab, rng.random(cnt))
            c1[sl, node], c2[sl, node] = np.divmod(got, n)
        row += cnt
    ratios = _tree_ratios(c1, c2, tree_arr, gtab)
    amp = params.c_k(m) if m >= 3 else 1.0
    mean = math.fsum(ratios) / samples
    sd = float(np.std(ratios, ddof=1)) if samples > 1 else 0.0
    return SumEstimate(amp * z_tot * mean, amp * z_tot * sd / math.sqrt(samples),
                       "tree-mixture", samples)
