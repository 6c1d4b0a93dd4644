"""Battery of summation bounds for cumulant kernels and their numeric checks.

Each check is a sum whose growth in n must not exceed a stated power. Fixed
indices sit at the center of 1..n, where coincident indices make the kernel
largest. Sums contracted with a probe vector are checked with both the uniform
unit vector and a one-hot vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..kernel import CorrelationParams
from .fit import loglog_slope
from .sums import CostCapExceeded, CumulantSum, estimate_cumulant_sum

GRID = (50, 100, 200)
GRID_HIGH = (20, 40, 80)
TOLERANCE = 0.2


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    group: str
    term: CumulantSum
    exponent: float
    grid: tuple = GRID


@dataclass
class LemmaResult:
    check: LemmaCheck
    values: list
    stderrs: list
    methods: list
    slope: float
    slope_stderr: float
    tolerance: float
    skipped: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = (not self.skipped) and self.slope <= self.check.exponent + self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.check.name, "group": self.check.group,
                "exponent": self.check.exponent, "grid": list(self.check.grid),
                "values": self.values, "stderrs": self.stderrs, "methods": self.methods,
                "slope": self.slope, "slope_stderr": self.slope_stderr,
                "tolerance": self.tolerance, "passed": self.passed, "skipped": self.skipped}


def lemma_checks(grid=GRID, grid_high=GRID_HIGH) -> list[LemmaCheck]:
    grid, grid_high = tuple(grid), tuple(grid_high)
    out: list[LemmaCheck] = []

    def add(name, group, text, summed, exponent, vecs=(), g=grid):
        if not vecs:
            out.append(LemmaCheck(name, group, CumulantSum.parse(text, summed, name=name), exponent, g))
            return
        for probe in ("uniform", "onehot"):
            term = CumulantSum.parse(text, summed, vectors={v: probe for v in vecs},
                                     name=f"{name}[{probe}]")
            out.append(LemmaCheck(f"{name}[{probe}]", group, term, exponent, g))

    pair = "a1 a2 | a3 a4"
    add("pair: sum a1", "pair", pair, "a1", 0.0)
    add("pair: sum a1 a2", "pair", pair, "a1 a2", 0.0)
    add("pair: sum a1 a3", "pair", pair, "a1 a3", 1.0)
    add("pair: sum a1 a2 a3", "pair", pair, "a1 a2 a3", 1.0)
    add("pair: sum a1..a4", "pair", pair, "a1 a2 a3 a4", 2.0)

    px = "x a2 | a3 a4"
    add("pair x: sum a2", "pair-vector", px, "a2", 0.0, ("x",))
    add("pair x: sum a3", "pair-vector", px, "a3", 0.5, ("x",))
    add("pair x: sum a2 a3", "pair-vector", px, "a2 a3", 1.0, ("x",))
    add("pair x: sum a3 a4", "pair-vector", px, "a3 a4", 1.0, ("x",))
    add("pair x: sum a2 a3 a4", "pair-vector", px, "a2 a3 a4", 1.5, ("x",))
    pxy = "x a2 | y a4"
    add("pair x,y: no sum", "pair-vector", pxy, "", 0.0, ("x", "y"))
    add("pair x,y: sum a2", "pair-vector", pxy, "a2", 0.5, ("x", "y"))
    add("pair x,y: sum a2 a4", "pair-vector", pxy, "a2 a4", 1.0, ("x", "y"))

    tri = "a1 a2 | a3 a4 | a5 a6"
    add("triple: sum a1..a4", "triple", tri, "a1 a2 a3 a4", 0.0)
    add("triple: sum a1..a5", "triple", tri, "a1 a2 a3 a4 a5", 1.0)
    add("triple: sum a1..a6", "triple", tri, "a1 a2 a3 a4 a5 a6", 2.0)
    add("triple: repeated a2", "triple", "a1 a2 | a2 a3 | a4 a5", "a2", 0.0)
    add("triple: closed k=3 term", "triple", "a1 a2 | a2 a3 | a3 a1", "a1 a2 a3", 2.0)

    tx = "x a2 | a3 a4 | a5 a6"
    add("triple x: sum a2", "triple-vector", tx, "a2", 0.5, ("x",))
    add("triple x: sum a2 a4", "triple-vector", tx, "a2 a4", 1.0, ("x",))
    add("triple x: sum a4 a5", "triple-vector", tx, "a4 a5", 0.5, ("x",))
    add("triple x: sum a2..a6", "triple-vector", tx, "a2 a3 a4 a5 a6", 1.5, ("x",))
    txy = "x a2 | y a4 | a5 a6"
    add("triple x,y: sum a5", "triple-vector", txy, "a5", 0.5, ("x", "y"))
    add("triple x,y: sum a4 a5", "triple-vector", txy, "a4 a5", 0.5, ("x", "y"))
    add("triple x,y,z: sum a2", "triple-vector", "x a2 | y a4 | z a6", "a2", 0.5, ("x", "y", "z"))

    add("quadruple: sum a1..a8", "high", "a1 a2 | a3 a4 | a5 a6 | a7 a8",
        "a1 a2 a3 a4 a5 a6 a7 a8", 2.0, g=grid_high)
    return out


def run_check(check: LemmaCheck, s: float = 3.0, c_kappa: float = 1.0, samples: int = 4000,
              seed: int = 0, tolerance: float = TOLERANCE, cost_cap: float = 1e9) -> LemmaResult:
    vals, errs, methods = [], [], []
    try:
        for n in check.grid:
            est = estimate_cumulant_sum(check.term, n, CorrelationParams(n, s, c_kappa),
                                        samples=samples, seed=seed, cost_cap=cost_cap)
            vals.append(est.value)
            errs.append(est.stderr)
            methods.append(est.method)
    except CostCapExceeded as exc:
        return LemmaResult(check, vals, errs, methods, float("nan"), float("nan"), tolerance,
                           skipped=str(exc))
    slope, se = loglog_slope(check.grid, vals)
    return LemmaResult(check, vals, errs, methods, slope, se, tolerance)


def run_battery(s: float = 3.0, grid=GRID, grid_high=GRID_HIGH, **kw) -> list[LemmaResult]:
    return [run_check(c, s=s, **kw) for c in lemma_checks(grid, grid_high)]
