"""Step-up / step-down engines, critical values and adjusted p-values.

Continuous procedures (BH, BY, Sarkar) only use the number of tests. Their
discrete counterparts replace n*x by the aggregated null CDF G, i.e. they
pick critical values with G(c_i) <= (alpha / D) * shape_i, where ``shape``
is the nondecreasing sequence defining the procedure and
D = sum_i (shape_i - shape_{i-1}) / i. This keeps FDR <= alpha under any
dependence between p-values. DBH (D fixed at 1, Heyse adjustment) is
provided for comparison but carries no such guarantee.

All array routines work along the last axis, so a 2-D array is treated as
a batch of independent p-value vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .dist import DiscretePValueDist
from .errors import DomainError
from .stepfun import StepFunction, aggregate, evaluate

CONTINUOUS_METHODS = ("BH", "BY", "Sarkar")
DISCRETE_METHODS = ("DBH", "DBY", "DSarkar")
METHODS = ("DBH", "BH", "DBY", "BY", "DSarkar", "Sarkar")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"number of hypotheses must be a positive integer, got {n}")


def harmonic(n: int) -> float:
    return math.fsum(1.0 / i for i in range(1, n + 1))


@dataclass(frozen=True, eq=False)
class ProcedureSpec:
    """A step-up shape ``shape[i-1]`` = y~_i (y~_0 = 0 implied) and a level.

    ``rescale`` overrides the constant D; the Heyse variant uses D = 1.
    """

    shape: np.ndarray
    alpha: float
    rescale: float | None = None
    name: str = ""

    def __post_init__(self) -> None:
        shape = np.array(self.shape, dtype=float).reshape(-1)
        _check_alpha(self.alpha)
        if shape.size == 0 or shape[0] < 0 or np.any(np.diff(shape) < 0):
            raise DomainError("shape must be a nonempty nondecreasing sequence >= 0")
        shape.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        if self.D <= 0:
            raise DomainError("rescaling constant must be positive")

    @property
    def n(self) -> int:
        return self.shape.size

    @property
    def D(self) -> float:
        if self.rescale is not None:
            return float(self.rescale)
        steps = np.diff(self.shape, prepend=0.0)
        return math.fsum(steps / np.arange(1, self.n + 1))

    @property
    def targets(self) -> np.ndarray:
        """y_i = alpha * y~_i / D, the ceilings for G at the critical values."""
        return self.alpha * self.shape / self.D

    @classmethod
    def by(cls, n: int, alpha: float = 0.05) -> "ProcedureSpec":
        _check_n(n)
        return cls(np.arange(1, n + 1, dtype=float), alpha, name="BY")

    @classmethod
    def sarkar(cls, n: int, alpha: float = 0.05) -> "ProcedureSpec":
        _check_n(n)
        i = np.arange(1, n + 1, dtype=float)
        return cls(i * (i + 1), alpha, name="Sarkar")

    @classmethod
    def heyse(cls, n: int, alpha: float = 0.05) -> "ProcedureSpec":
        _check_n(n)
        return cls(np.arange(1, n + 1, dtype=float), alpha, rescale=1.0, name="DBH")


# --- continuous critical values ----------------------------------------------


def by_constants(n: int, alpha: float) -> np.ndarray:
    _check_n(n)
    _check_alpha(alpha)
    return np.arange(1, n + 1) * alpha / (n * harmonic(n))


def sarkar_constants(n: int, alpha: float) -> np.ndarray:
    _check_n(n)
    _check_alpha(alpha)
    i = np.arange(1, n + 1, dtype=float)
    return i * (i + 1) * alpha / (2.0 * n * n)


def bh_constants(n: int, alpha: float) -> np.ndarray:
    _check_n(n)
    _check_alpha(alpha)
    return np.arange(1, n + 1) * alpha / n


def discrete_constants(g: StepFunction, spec: ProcedureSpec) -> np.ndarray:
    """Largest attainable c_i with G(c_i) <= y_i, or 0 if no jump qualifies."""
    if g.n != spec.n:
        raise DomainError(f"G aggregates {g.n} hypotheses but the shape has length {spec.n}")
    idx = np.searchsorted(g.values, spec.targets, side="right") - 1
    return np.where(idx >= 0, g.jumps[np.maximum(idx, 0)], 0.0)


# --- sorting helpers --------------------------------------------------------


def _as_pvalues(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=float)
    if p.ndim == 0 or p.shape[-1] == 0:
        raise DomainError("need at least one p-value")
    if np.any(~(p >= 0.0) | (p > 1.0)):
        raise DomainError("p-values must lie in [0, 1]")
    return p


def _sort(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(p, axis=-1, kind="stable")
    return order, np.take_along_axis(p, order, axis=-1)


def _unsort(order: np.ndarray, sorted_values: np.ndarray) -> np.ndarray:
    out = np.empty_like(sorted_values)
    np.put_along_axis(out, order, sorted_values, axis=-1)
    return out


def _first_of_ties(sorted_p: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Give every member of a run of equal p-values the value of its first member."""
    n = sorted_p.shape[-1]
    starts = np.ones(sorted_p.shape, dtype=bool)
    starts[..., 1:] = sorted_p[..., 1:] != sorted_p[..., :-1]
    idx = np.where(starts, np.arange(n), 0)
    idx = np.maximum.accumulate(idx, axis=-1)
    return np.take_along_axis(values, idx, axis=-1)


def _cummin_from_right(a: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(a[..., ::-1], axis=-1)[..., ::-1]


def _step_up_k(sorted_p: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = sorted_p.shape[-1]
    ok = sorted_p <= c
    last = n - np.argmax(ok[..., ::-1], axis=-1)
    return np.where(ok.any(axis=-1), last, 0)


def _step_down_k(sorted_p: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = sorted_p.shape[-1]
    fail = ~(sorted_p <= c)
    return np.where(fail.any(axis=-1), np.argmax(fail, axis=-1), n)


def _mask(order: np.ndarray, k) -> np.ndarray:
    n = order.shape[-1]
    in_sorted = np.arange(n) < np.asarray(k)[..., None]
    return _unsort(order, in_sorted)


# --- outcomes ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Result of one procedure on one p-value vector.

    ``rejected`` and ``adjusted`` are in input order; ``sorted_pvalues`` and
    ``critical`` in sorted order.
    """

    __test__ = False  # not a pytest class

    method: str
    pvalues: np.ndarray
    sorted_pvalues: np.ndarray
    critical: np.ndarray | None
    k: int
    rejected: np.ndarray
    adjusted: np.ndarray | None = None
    fdr_guaranteed: bool = True
    notes: tuple[str, ...] = field(default=())

    @property
    def rejected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.rejected)


def _check_lengths(p: np.ndarray, c: np.ndarray) -> None:
    if c.shape[-1] != p.shape[-1]:
        raise DomainError(f"{p.shape[-1]} p-values but {c.shape[-1]} critical values")


def step_up(pvalues, c, method: str = "step-up") -> TestOutcome:
    """Reject the k smallest p-values, k = max{i : p_(i) <= c_i} (0 if none)."""
    p = _as_pvalues(pvalues)
    c = np.asarray(c, dtype=float)
    _check_lengths(p, c)
    order, s = _sort(p)
    k = int(_step_up_k(s, c))
    return TestOutcome(method, p, s, c, k, _mask(order, k))


def step_down(pvalues, c, method: str = "step-down") -> TestOutcome:
    """Reject while p_(j) <= c_j holds for every j up to k."""
    p = _as_pvalues(pvalues)
    c = np.asarray(c, dtype=float)
    _check_lengths(p, c)
    order, s = _sort(p)
    k = int(_step_down_k(s, c))
    return TestOutcome(method, p, s, c, k, _mask(order, k))


# --- adjusted p-values -------------------------------------------------------


def _shape_ratio(mass: np.ndarray, spec: ProcedureSpec) -> np.ndarray:
    # D * G(p_(j)) / y~_j, with 0/0 read as 0
    num = spec.D * mass
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(spec.shape > 0, num / np.where(spec.shape > 0, spec.shape, 1.0), np.inf)
    return np.where(num == 0.0, 0.0, ratio)


def _adjust_sorted(sorted_mass: np.ndarray, spec: ProcedureSpec) -> np.ndarray:
    raw = np.minimum(_shape_ratio(sorted_mass, spec), 1.0)
    return _cummin_from_right(raw)


def adjusted_shape(g: StepFunction, spec: ProcedureSpec, pvalues) -> np.ndarray:
    """min_{j >= i} min(D * G(p_(j)) / y~_j, 1), returned in input order.

    For the BY shape this is the usual discrete-BY adjustment; the same
    telescoping argument gives the Sarkar-shape version.
    """
    p = _as_pvalues(pvalues)
    if g.n != spec.n or p.shape[-1] != spec.n:
        raise DomainError("G, shape and p-values must all have the same length")
    order, s = _sort(p)
    adj = _first_of_ties(s, _adjust_sorted(evaluate(g, s), spec))
    return _unsort(order, adj)


def adjusted_linear(spec: ProcedureSpec, pvalues) -> np.ndarray:
    """Continuous counterpart of ``adjusted_shape``: G replaced by n*x."""
    p = _as_pvalues(pvalues)
    if p.shape[-1] != spec.n:
        raise DomainError("shape and p-values must have the same length")
    order, s = _sort(p)
    adj = _first_of_ties(s, _adjust_sorted(spec.n * s, spec))
    return _unsort(order, adj)


def adjusted_heyse(g: StepFunction, pvalues) -> np.ndarray:
    """Heyse's discrete BH adjustment.

    p~_(n) = p_(n) and p~_(i) = min(p~_(i+1), G(p_(i)) / i). This does not
    control the FDR in general.
    """
    p = _as_pvalues(pvalues)
    n = p.shape[-1]
    if g.n != n:
        raise DomainError(f"G aggregates {g.n} hypotheses, got {n} p-values")
    order, s = _sort(p)
    raw = evaluate(g, s) / np.arange(1, n + 1)
    raw[..., -1] = s[..., -1]
    adj = _first_of_ties(s, _cummin_from_right(raw))
    return _unsort(order, adj)


def heyse_constants(g: StepFunction, alpha: float) -> np.ndarray:
    """Thresholds equivalent to Heyse adjusted p-values <= alpha.

    Largest jump with G <= i * alpha for i < n, and alpha itself at i = n.
    Not necessarily monotone.
    """
    c = discrete_constants(g, ProcedureSpec.heyse(g.n, alpha))
    c[-1] = alpha
    return c


# --- bounds ------------------------------------------------------------------


class FDRBound(NamedTuple):
    true_null: float  # uses only the true-null distributions
    full: float  # uses G over every hypothesis


def telescoped_bound(g: StepFunction, c) -> float:
    """sum_r (1/r) (G(c_r) - G(c_{r-1})) with c_0 = 0."""
    c = np.asarray(c, dtype=float)
    if np.any(np.diff(c) < 0):
        raise DomainError("critical values must be nondecreasing")
    gc = evaluate(g, c)
    steps = np.diff(gc, prepend=0.0)
    return math.fsum(steps / np.arange(1, c.size + 1))


def fdr_bound(
    dists: Sequence[DiscretePValueDist], c, truth: Sequence[bool] | None = None
) -> FDRBound:
    """Upper bounds on the FDR of the step-up procedure with constants ``c``.

    ``truth`` marks the true nulls; by default every hypothesis is one.
    """
    c = np.asarray(c, dtype=float)
    if c.size != len(dists):
        raise DomainError("need one critical value per distribution")
    truth = np.ones(len(dists), dtype=bool) if truth is None else np.asarray(truth, dtype=bool)
    full = telescoped_bound(aggregate(dists), c)
    if not truth.any():
        return FDRBound(0.0, full)
    weights = truth.astype(float)
    return FDRBound(telescoped_bound(aggregate(dists, weights), c), full)


# --- method registry -----------------------------------------------------------


def _spec_for(method: str, n: int, alpha: float) -> ProcedureSpec:
    if method in ("BH", "DBH"):
        return ProcedureSpec.heyse(n, alpha)
    if method in ("BY", "DBY"):
        return ProcedureSpec.by(n, alpha)
    if method in ("Sarkar", "DSarkar"):
        return ProcedureSpec.sarkar(n, alpha)
    raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _need_g(method: str, g: StepFunction | None, n: int) -> StepFunction:
    if g is None:
        raise DomainError(f"{method} needs the null distributions of the p-values")
    if g.n != n:
        raise DomainError(f"G aggregates {g.n} hypotheses, got {n} p-values")
    return g


def critical_values(method: str, n: int, alpha: float, g: StepFunction | None = None) -> np.ndarray:
    spec = _spec_for(method, n, alpha)
    if method == "BH":
        return bh_constants(n, alpha)
    if method == "BY":
        return by_constants(n, alpha)
    if method == "Sarkar":
        return sarkar_constants(n, alpha)
    g = _need_g(method, g, n)
    if method == "DBH":
        return heyse_constants(g, alpha)
    return discrete_constants(g, spec)


def adjust(method: str, pvalues, g: StepFunction | None = None) -> np.ndarray:
    """Adjusted p-values of ``method``; level-free, so alpha is irrelevant here."""
    p = _as_pvalues(pvalues)
    n = p.shape[-1]
    spec = _spec_for(method, n, 0.05)
    if method in CONTINUOUS_METHODS:
        return adjusted_linear(spec, p)
    g = _need_g(method, g, n)
    if method == "DBH":
        return adjusted_heyse(g, p)
    return adjusted_shape(g, spec, p)


def reject(method: str, pvalues, alpha: float, g: StepFunction | None = None) -> np.ndarray:
    """Rejection mask for a p-value vector or a batch of them (rows)."""
    p = _as_pvalues(pvalues)
    n = p.shape[-1]
    order, s = _sort(p)
    if method == "DBH":
        adj = adjusted_heyse(_need_g(method, g, n), s)
        k = np.sum(adj <= alpha, axis=-1)
    else:
        k = _step_up_k(s, critical_values(method, n, alpha, g))
    return _mask(order, k)


def apply(method: str, pvalues, alpha: float = 0.05, g: StepFunction | None = None) -> TestOutcome:
    """Run ``method`` on one p-value vector, with adjusted p-values attached."""
    p = _as_pvalues(pvalues)
    if p.ndim != 1:
        raise DomainError("apply() takes a single p-value vector; use reject() for batches")
    n = p.size
    c = critical_values(method, n, alpha, g)
    adj = adjust(method, p, g)
    order, s = _sort(p)
    if method == "DBH":
        k = int(np.sum(adj <= alpha))
        rejected = adj <= alpha
        return TestOutcome(
            method, p, s, c, k, rejected, adj, fdr_guaranteed=False,
            notes=("Heyse adjustment: FDR control is not guaranteed",),
        )
    k = int(_step_up_k(s, c))
    return TestOutcome(method, p, s, c, k, _mask(order, k), adj)


def format_outcome_table(
    ids: Sequence[str],
    pvalues: Sequence[float],
    outcomes: Mapping[str, TestOutcome],
    decimals: int | None = 4,
) -> str:
    """CSV with ``id, pvalue, adjusted_<method>..., rejected_<method>...``."""

    def fmt(v: float) -> str:
        return repr(float(v)) if decimals is None else f"{v:.{decimals}f}"

    names = list(outcomes)
    header = ["id", "pvalue"] + [f"adjusted_{m}" for m in names] + [f"rejected_{m}" for m in names]
    lines = [",".join(header)]
    for i, ident in enumerate(ids):
        row = [ident, repr(float(pvalues[i]))]
        row += [fmt(outcomes[m].adjusted[i]) for m in names]
        row += ["1" if outcomes[m].rejected[i] else "0" for m in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
