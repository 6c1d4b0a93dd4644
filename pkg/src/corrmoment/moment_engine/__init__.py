"""Exponent accounting and numeric oracles for the cumulant expansion of trace moments."""
from .certify import (
    CERT_GRID,
    TermCertificate,
    certify_exponents,
    certify_leading,
)
from .exponents import (
    LEADING,
    SUBLEADING,
    ExponentReport,
    MomentBound,
    bound_trace_moment,
    predict_exponent,
)
from .fit import loglog_slope, oracle_exponent_fit
from .lemmas import LemmaCheck, LemmaResult, lemma_checks, run_battery, run_check
from .sums import (
    CostCapExceeded,
    CumulantSum,
    SumEstimate,
    brute_force_sum,
    estimate_cumulant_sum,
    oracle_cumulant_sum,
)
from .terms import (
    exact_gaussian_trace_moment,
    orbit_terms,
    partition_term,
    partition_term_naive,
)
from .tmatrix import symmetric_norm, t_bracket, t_matrix
