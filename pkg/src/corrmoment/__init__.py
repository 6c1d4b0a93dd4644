"""Trace-moment bounds for random matrices with polynomially decaying metric correlations."""
from .kernel import (
    CorrelationParams,
    IndexPair,
    kappa2,
    kappa_k_bound,
    metric_distance,
    minimal_spanning_tree,
)
from .partitions import (
    Pairing,
    Partition,
    catalan,
    enumerate_pairings,
    enumerate_partitions_no_singletons,
    is_crossing,
)

__version__ = "0.1.0"
