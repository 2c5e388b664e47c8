"""FDR procedures for discrete p-values under arbitrary dependence.

Discrete versions of the Benjamini-Yekutieli and Sarkar step-up procedures,
Heyse's discrete BH for comparison, exact enumeration of FDR / FWER for
small instances, and a Monte Carlo power study built on Fisher exact tests.
"""

from .dist import (
    DiscretePValueDist,
    DistRecord,
    Table2x2,
    fisher_one_sided,
    fisher_two_sided,
    pvalue_support,
    read_dists,
    write_dists,
)
from .errors import DomainError, EnumerationLimitError
from .oracle import PointMassDist, exact_error_rates, monte_carlo_error_rates
from .procedures import METHODS, ProcedureSpec, adjust, apply, critical_values, reject
from .sim import SimConfig, SimResult, run_config, run_suite
from .stepfun import StepFunction, aggregate, evaluate

__all__ = [
    "DiscretePValueDist", "DistRecord", "Table2x2", "fisher_one_sided", "fisher_two_sided",
    "pvalue_support", "read_dists", "write_dists", "DomainError", "EnumerationLimitError",
    "PointMassDist", "exact_error_rates", "monte_carlo_error_rates", "METHODS", "ProcedureSpec",
    "adjust", "apply", "critical_values", "reject", "SimConfig", "SimResult", "run_config",
    "run_suite", "StepFunction", "aggregate", "evaluate",
]
