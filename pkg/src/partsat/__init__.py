"""Monte Carlo solve-time estimation and decomposition-set search for
partitioned SAT solving.

Substituting all assignments of a variable subset splits a SAT instance
into independent subproblems; sampling a few of them prices the whole
family.  This package bundles the sampling estimator with its interruption
rule, a tabu search over candidate subsets, a deterministic CDCL solver so
experiments replay exactly, and encoders for the A5/1 and Bivium keystream
generators used as benchmarks.
"""

from .cnf import Assignment, CnfFormula, DimacsError, load_dimacs, parse_dimacs, serialize_dimacs
from .decomposition import (
    DecompositionSet,
    SamplePlan,
    chi_decode,
    chi_encode,
    draw_sample,
    enumerate_family,
)
from .predictive import (
    EstimateStatus,
    LimitExceededError,
    PredictiveEstimate,
    confidence_halfwidth,
    estimate,
    exhaustive_total,
    predicted_total,
    sample_variance,
    solve_whole,
    student_t_quantile,
)
from .solver import (
    CdclSolver,
    CostMetric,
    SolveCost,
    SolveLimits,
    SolveResult,
    SolveStatus,
    solve,
    solve_external,
)
from .tabu import (
    SearchConfig,
    SearchReport,
    SupbsVerificationError,
    init_from_supbs,
    neighbors,
    run_search,
)
from .runner import RunConfig, RunRecord, evaluate_parallel, run_estimate, run_tabu
from . import ciphers

__version__ = "0.1.0"

__all__ = [
    "Assignment", "CnfFormula", "DimacsError", "load_dimacs", "parse_dimacs",
    "serialize_dimacs",
    "DecompositionSet", "SamplePlan", "chi_decode", "chi_encode",
    "draw_sample", "enumerate_family",
    "EstimateStatus", "LimitExceededError", "PredictiveEstimate",
    "confidence_halfwidth", "estimate", "exhaustive_total", "predicted_total",
    "sample_variance", "solve_whole", "student_t_quantile",
    "CdclSolver", "CostMetric", "SolveCost", "SolveLimits", "SolveResult",
    "SolveStatus", "solve", "solve_external",
    "SearchConfig", "SearchReport", "SupbsVerificationError",
    "init_from_supbs", "neighbors", "run_search",
    "RunConfig", "RunRecord", "evaluate_parallel", "run_estimate", "run_tabu",
    "ciphers",
]
