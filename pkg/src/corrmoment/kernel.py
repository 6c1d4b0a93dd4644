"""Index-pair metric, the pair covariance kernel and the spanning-tree bound
for higher cumulants."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class IndexPair(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class CorrelationParams:
    n: int
    s: float = 3.0
    c_kappa: float = 1.0
    c_k_table: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.s > 2:
            raise ValueError(f"decay exponent must satisfy s > 2, got {self.s}")
        if not self.c_kappa > 0:
            raise ValueError(f"c_kappa must be positive, got {self.c_kappa}")
        for k, v in self.c_k_table.items():
            if int(k) < 3:
                raise ValueError(f"c_k_table keys must be orders >= 3, got {k}")
            if not float(v) > 0:
                raise ValueError(f"C({k}) must be positive, got {v}")

    def c_k(self, k: int) -> float:
        """Amplitude of the order-k bound; unset orders default to 1."""
        table = {int(a): float(b) for a, b in self.c_k_table.items()}
        return table.get(int(k), 1.0)

    def with_n(self, n: int) -> "CorrelationParams":
        return CorrelationParams(n, self.s, self.c_kappa, dict(self.c_k_table))

    def __hash__(self):
        return hash((self.n, self.s, self.c_kappa, tuple(sorted(self.c_k_table.items()))))


def metric_distance(p: Sequence[int], q: Sequence[int]) -> int:
    a1, a2 = int(p[0]), int(p[1])
    a3, a4 = int(q[0]), int(q[1])
    return min(abs(a1 - a3) + abs(a2 - a4), abs(a1 - a4) + abs(a2 - a3))


def kernel_profile(d, s: float, c_kappa: float = 1.0):
    """Kernel value as a function of distance; works on scalars and arrays."""
    d = np.asarray(d, dtype=np.float64)
    return c_kappa / (1.0 + d ** s)


def kernel_table(n: int, s: float, c_kappa: float = 1.0) -> np.ndarray:
    """Lookup table g[d] for every distance 0 <= d <= 2n."""
    return kernel_profile(np.arange(2 * n + 1), s, c_kappa)


def kappa2(p: Sequence[int], q: Sequence[int], params: CorrelationParams) -> float:
    d = metric_distance(p, q)
    return params.c_kappa / (1.0 + float(d) ** params.s)


def minimal_spanning_tree(points: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    """Kruskal on the complete graph over `points` weighted by the metric.

    Ties are broken by the lexicographically smallest vertex-index pair.
    """
    m = len(points)
    if m < 2:
        raise ValueError("degenerate tree")
    cand = sorted(
        (metric_distance(points[a], points[b]), a, b)
        for a, b in itertools.combinations(range(m), 2)
    )
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for _, a, b in cand:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
            tree.append((a, b))
            if len(tree) == m - 1:
                break
    return sorted(tree)


def kappa_k_bound(points: Sequence[Sequence[int]], params: CorrelationParams) -> float:
    k = len(points)
    if k < 3:
        raise ValueError("use kappa2")
    prod = params.c_k(k)
    for a, b in minimal_spanning_tree(points):
        prod *= kappa2(points[a], points[b], params)
    return prod


def block_value(points: Sequence[Sequence[int]], params: CorrelationParams) -> float:
    """Kernel value of one cumulant block: kappa2 for two points, the tree bound above."""
    if len(points) == 2:
        return kappa2(points[0], points[1], params)
    return kappa_k_bound(points, params)


def sorted_pair(p: Sequence[int]) -> tuple[int, int]:
    a, b = int(p[0]), int(p[1])
    return (a, b) if a <= b else (b, a)


def folded_distance(p: Sequence[int], q: Sequence[int]) -> int:
    """Same value as metric_distance: for points on a line the order-preserving
    matching minimizes the total displacement, so d is the L1 distance of the
    sorted pairs. Kept separate because the fast oracles build on it."""
    a, b = sorted_pair(p)
    c, e = sorted_pair(q)
    return abs(a - c) + abs(b - e)

