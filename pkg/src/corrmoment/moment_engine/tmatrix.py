"""The auxiliary matrices that absorb internal-index summations.

T[a1, a3] = Σ_{a2} κ2((a1,a2),(a2,a3)) and, recursively,
T^[j][a1, b] = Σ_{a2, c} κ2((a1,a2),(c,b)) (T^{j-1})[a2, c].
"""
from __future__ import annotations

import numba
import numpy as np
from scipy.linalg import eigvalsh

from ..kernel import CorrelationParams, kernel_table


@numba.njit(cache=True)
def _t_matrix(n, gtab):
    t = np.zeros((n, n))
    for a in range(n):
        for c in range(n):
            acc = 0.0
            for b in range(n):
                d = min(abs(a - b) + abs(b - c), abs(a - c))
                acc += gtab[d]
            t[a, c] = acc
    return t


@numba.njit(cache=True)
def _sandwich(m, gtab):
    """out[a, e] = Σ_{b, c} g(d((a,b),(c,e))) m[b, c] for symmetric m; out is symmetric."""
    n = m.shape[0]
    out = np.zeros((n, n))
    for a in range(n):
        for e in range(a, n):
            acc = 0.0
            ae = abs(a - e)
            for b in range(n):
                eb = abs(b - e)
                row = 0.0
                for c in range(n):
                    d1 = abs(a - c) + eb
                    d2 = ae + abs(b - c)
                    row += gtab[d1 if d1 < d2 else d2] * m[b, c]
                acc += row
            out[a, e] = acc
            out[e, a] = acc
    return out


def t_matrix(n: int, params: CorrelationParams) -> np.ndarray:
    return _t_matrix(n, kernel_table(n, params.s, params.c_kappa))


def t_bracket(j: int, n: int, params: CorrelationParams, t: np.ndarray | None = None) -> np.ndarray:
    """T^[j] for j >= 2; T^[1] is T itself."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if t is None:
        t = t_matrix(n, params)
    if j == 1:
        return t
    power = np.linalg.matrix_power(t, j - 1)
    power = 0.5 * (power + power.T)
    return _sandwich(power, kernel_table(n, params.s, params.c_kappa))


def symmetric_norm(m: np.ndarray) -> float:
    ev = eigvalsh(m)
    return float(max(abs(ev[0]), abs(ev[-1])))
