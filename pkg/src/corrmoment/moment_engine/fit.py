"""Log-log regression of a sum against the matrix size."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log(value) on log(n) and its standard error (0 for two points)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ns) < 2 or len(ns) != len(values):
        raise ValueError("need at least two (n, value) points")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("log-log fit needs positive finite values")
    x, y = np.log(ns), np.log(values)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    if len(ns) == 2:
        return slope, 0.0
    resid = y - y.mean() - slope * xm
    return slope, math.sqrt(float(resid @ resid) / (len(ns) - 2) / sxx)


def oracle_exponent_fit(term, n_grid: Sequence[int], params, evaluate: Callable | None = None
                        ) -> tuple[float, float]:
    """Fit the growth exponent of `term` over `n_grid`.

    `term` is either a CumulantSum (evaluated by the exact oracle) or a callable n -> value.
    """
    from .sums import CumulantSum, oracle_cumulant_sum

    grid = [int(n) for n in n_grid]
    if len(grid) < 3 or sorted(set(grid)) != grid:
        raise ValueError("grid needs >= 3 strictly increasing sizes")
    if evaluate is None:
        if isinstance(term, CumulantSum):
            evaluate = lambda n: oracle_cumulant_sum(term, n, params.with_n(n))  # noqa: E731
        else:
            evaluate = term
    vals = [evaluate(n) for n in grid]
    if any(v <= 0 for v in vals):
        raise ValueError(f"nonpositive sums {vals}")
    return loglog_slope(grid, vals)
