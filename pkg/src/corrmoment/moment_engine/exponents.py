"""Power-of-N accounting for each partition of the cumulant expansion.

Every free index summation is worth N^{1/2}; the reduction trace says how the
summations are spent. Exponents are the power of N of the unnormalized sum
Σ_a Π_B κ_B; subtracting k/2+1 gives the power in E[tr H^k]/N.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..graph_reduce import (
    ReductionTrace,
    TupleSubgraph,
    WeightedGraph,
    classify_tuple_adjacency,
    reduce,
)
from ..partitions import Partition, catalan, enumerate_partitions_no_singletons, is_crossing

LEADING = "Leading"
SUBLEADING = "Subleading"


@dataclass
class ExponentReport:
    partition: Partition
    predicted_exponent: float
    normalized_exponent: float
    verdict: str
    trace: ReductionTrace
    f_block_sizes: list[int]
    x_set_size: int
    rule: str
    contributions: list[tuple[str, float]] = field(default_factory=list)
    final_graph: WeightedGraph | None = None
    tuple_sites: list[TupleSubgraph] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "partition": [list(b) for b in self.partition.blocks],
            "k": self.partition.k,
            "predicted_exponent": self.predicted_exponent,
            "normalized_exponent": self.normalized_exponent,
            "verdict": self.verdict,
            "rule": self.rule,
            "contributions": [[a, b] for a, b in self.contributions],
            "f_block_sizes": list(self.f_block_sizes),
            "x_set_size": self.x_set_size,
            "trace": self.trace.to_dict(),
            "final_graph": self.final_graph.to_dict() if self.final_graph else None,
            "tuple_sites": [t.to_dict() for t in self.tuple_sites],
        }


@dataclass
class MomentBound:
    k: int
    per_partition: list[ExponentReport]
    leading_count: int
    bound_exponent: float

    def to_dict(self) -> dict:
        worst = self.bound_exponent if self.per_partition else None
        return {"k": self.k, "leading_count": self.leading_count,
                "bound_exponent": worst,
                "per_partition": [r.to_dict() for r in self.per_partition]}


def touched_vertices(k: int, blocks) -> set[int]:
    """Vertex labels used by the given blocks; edge j touches a_j and a_{j+1}."""
    out = set()
    for b in blocks:
        for j in b:
            out.add(j)
            out.add(j % k + 1)
    return out


def predict_exponent(p: Partition) -> ExponentReport:
    k = p.k
    if k < 1:
        raise ValueError("k must be >= 1")
    if any(len(b) < 2 for b in p.blocks):
        raise ValueError("partition has singleton blocks")
    final, trace = reduce(p)
    sites = classify_tuple_adjacency(final)
    f_blocks = [b for b in p.blocks if len(b) >= 4]
    x_size = len(touched_vertices(k, f_blocks))
    survivors = len(final.edges)
    absorbed = k - survivors
    half = 0.5
    if p.is_pairing and not is_crossing(p):
        rule = "non-crossing pairing: trace of a weight-k/2 loop"
        contrib = [("loop matrix estimated by its norm", k * half), ("trace over the remaining vertex", 1.0)]
    elif p.is_pairing:
        rule = "crossing pairing: recursive summation"
        contrib = [("summations over surviving vertices", survivors * half),
                   ("summations absorbed into weighted edges", absorbed * half),
                   ("starting overestimate", half)]
    elif k == 3:
        rule = "single 3-block"
        contrib = [("three summations around one 3-cumulant", 2.0)]
    elif not f_blocks:
        rule = "pairs and 3-blocks"
        contrib = [("summations over surviving vertices", survivors * half),
                   ("summations absorbed into weighted edges", absorbed * half),
                   ("starting overestimate", half)]
    else:
        rule = "high-cumulant split"
        contrib = [("high-cumulant factor over X", x_size * half),
                   ("remaining summations", (k - x_size) * half),
                   ("starting overestimate", half)]
    pred = sum(c for _, c in contrib)
    norm = pred - (k * half + 1.0)
    return ExponentReport(
        partition=p,
        predicted_exponent=pred,
        normalized_exponent=norm,
        verdict=LEADING if norm == 0 else SUBLEADING,
        trace=trace,
        f_block_sizes=sorted(len(b) for b in f_blocks),
        x_set_size=x_size,
        rule=rule,
        contributions=contrib,
        final_graph=final,
        tuple_sites=sites,
    )


def bound_trace_moment(k: int) -> MomentBound:
    reports = [predict_exponent(p) for p in enumerate_partitions_no_singletons(k)]
    leading = sum(r.verdict == LEADING for r in reports)
    if k % 2 == 0:
        assert leading == catalan(k // 2)
    # k = 1 has no singleton-free partition; the moment vanishes identically
    worst = max((r.normalized_exponent for r in reports), default=float("-inf"))
    return MomentBound(k, reports, leading, worst)
