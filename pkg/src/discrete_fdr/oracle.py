"""Exact FDR / FWER by enumerating every joint outcome of independent discrete p-values.

This is the ground truth the procedures are checked against, and the
machinery behind the counterexample showing that Heyse's discrete BH can
exceed its nominal level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dist import DiscretePValueDist, DistRecord
from .errors import DomainError, EnumerationLimitError
from .procedures import adjust, reject
from .stepfun import StepFunction, aggregate

DEFAULT_CAP = 2**24

Method = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PointMassDist:
    """Finitely many atoms (p-value, probability) plus a true-null flag.

    ``probs`` is the null distribution. A false null may carry
    ``alt_probs`` over the same values; it is then sampled from those,
    otherwise from ``probs``.
    """

    values: np.ndarray
    probs: np.ndarray
    truth: bool = True
    alt_probs: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if values.size == 0 or values.size != probs.size:
            raise DomainError("need the same nonzero number of values and probabilities")
        if values[0] <= 0 or values[-1] > 1 or np.any(np.diff(values) <= 0):
            raise DomainError("atom locations must be strictly increasing in (0, 1]")
        if np.any(probs <= 0) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise DomainError("atom probabilities must be positive and sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if self.alt_probs is not None:
            alt = np.array(self.alt_probs, dtype=float).reshape(-1)
            if alt.size != values.size or np.any(alt < 0) or abs(math.fsum(alt) - 1.0) > 1e-12:
                raise DomainError("alternative probabilities must match the atoms and sum to 1")
            object.__setattr__(self, "alt_probs", alt)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    @property
    def sampling_probs(self) -> np.ndarray:
        if not self.truth and self.alt_probs is not None:
            return self.alt_probs
        return self.probs

    def to_dist(self) -> DiscretePValueDist:
        return DiscretePValueDist.from_atoms(self.values, self.probs)

    @classmethod
    def from_dist(cls, dist: DiscretePValueDist, truth: bool = True, alt_probs=None) -> "PointMassDist":
        return cls(dist.support, dist.probabilities, truth, alt_probs)

    @classmethod
    def from_record(cls, rec: DistRecord) -> "PointMassDist":
        return cls.from_dist(rec.dist, rec.truth, rec.alt_probs)


def null_step_function(dists: Sequence[PointMassDist]) -> StepFunction:
    return aggregate([d.to_dist() for d in dists])


def procedure(method: str, dists: Sequence[PointMassDist], alpha: float = 0.05) -> Method:
    """Batch rejection rule for a named method, with G built from the nulls of ``dists``."""
    g = null_step_function(dists)
    return lambda pvalues: reject(method, pvalues, alpha, g)


@dataclass(frozen=True)
class TraceRow:
    pvalues: tuple[float, ...]
    sorted_pvalues: tuple[float, ...]
    adjusted_sorted: tuple[float, ...] | None
    atom_probs: tuple[float, ...]
    joint: float
    rejections: int
    false_rejections: int


@dataclass(frozen=True, eq=False)
class ErrorRates:
    fdr: float
    fwer: float
    mass: float  # total probability visited, 1 up to rounding
    outcomes: int
    trace: list[TraceRow] | None = None


def outcome_count(dists: Sequence[PointMassDist]) -> int:
    return math.prod(d.values.size for d in dists)


def exact_error_rates(
    dists: Sequence[PointMassDist],
    method: str | Method,
    alpha: float = 0.05,
    *,
    cap: int = DEFAULT_CAP,
    trace: bool = False,
    chunk: int = 1 << 16,
) -> ErrorRates:
    """FDR and FWER of ``method`` when the p-values are independent draws from ``dists``.

    ``method`` is a method name or a function mapping a (batch, n) array of
    p-values to a rejection mask. Outcomes are visited in mixed-radix order
    with the first hypothesis varying fastest. FDP is V / max(R, 1).
    """
    if len(dists) == 0:
        raise DomainError("need at least one distribution")
    total = outcome_count(dists)
    if total > cap:
        raise EnumerationLimitError(total, cap)

    adjuster = None
    if isinstance(method, str):
        g = null_step_function(dists)
        name = method
        rule: Method = lambda p: reject(name, p, alpha, g)
        if trace:
            adjuster = lambda p: adjust(name, p, g)
    else:
        rule = method

    radices = tuple(d.values.size for d in dists)
    truth = np.array([d.truth for d in dists])
    values = [d.values for d in dists]
    probs = [d.sampling_probs for d in dists]
    fdr_parts, fwer_parts, mass_parts = [], [], []
    rows: list[TraceRow] | None = [] if trace else None

    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        digits = np.unravel_index(flat, radices, order="F")
        pv = np.column_stack([v[d] for v, d in zip(values, digits)])
        atom_p = np.column_stack([p[d] for p, d in zip(probs, digits)])
        joint = np.prod(atom_p, axis=1)

        mask = np.asarray(rule(pv), dtype=bool)
        r = mask.sum(axis=1)
        v = (mask & truth).sum(axis=1)
        fdp = v / np.maximum(r, 1)
        fdr_parts.append(math.fsum(joint * fdp))
        fwer_parts.append(math.fsum(joint[v > 0]))
        mass_parts.append(math.fsum(joint))

        if rows is not None:
            order = np.argsort(pv, axis=1, kind="stable")
            spv = np.take_along_axis(pv, order, axis=1)
            adj = np.take_along_axis(adjuster(pv), order, axis=1) if adjuster else None
            for i in range(flat.size):
                rows.append(
                    TraceRow(
                        tuple(pv[i].tolist()),
                        tuple(spv[i].tolist()),
                        tuple(adj[i].tolist()) if adj is not None else None,
                        tuple(atom_p[i].tolist()),
                        float(joint[i]),
                        int(r[i]),
                        int(v[i]),
                    )
                )

    return ErrorRates(
        math.fsum(fdr_parts), math.fsum(fwer_parts), math.fsum(mass_parts), total, rows
    )


def format_trace(rows: Sequence[TraceRow], decimals: int = 4) -> str:
    """CSV laid out like a worked-example table: raw, sorted, adjusted, atom and joint probabilities."""
    n = len(rows[0].pvalues)
    header = (
        [f"pv{i}" for i in range(1, n + 1)]
        + [f"pv({i})" for i in range(1, n + 1)]
        + [f"adj({i})" for i in range(1, n + 1)]
        + [f"P(PV{i})" for i in range(1, n + 1)]
        + ["joint", "rejections", "false_rejections"]
    )
    lines = [",".join(header)]
    f = f"{{:.{decimals}f}}"
    for row in rows:
        adj = row.adjusted_sorted or (float("nan"),) * n
        cells = [f.format(x) for x in row.pvalues + row.sorted_pvalues + adj + row.atom_probs]
        cells += [repr(row.joint), str(row.rejections), str(row.false_rejections)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MonteCarloRates:
    fdr: float
    fdr_se: float
    fwer: float
    fwer_se: float
    trials: int


def monte_carlo_error_rates(
    dists: Sequence[PointMassDist],
    method: str | Method,
    trials: int,
    seed: int | np.random.SeedSequence | None = 0,
    alpha: float = 0.05,
    *,
    batch: int = 1 << 15,
) -> MonteCarloRates:
    """Simulated FDR / FWER, for cross-checking or instances too big to enumerate."""
    if trials < 1:
        raise DomainError("need at least one trial")
    rule = procedure(method, dists, alpha) if isinstance(method, str) else method
    rng = np.random.default_rng(seed)
    truth = np.array([d.truth for d in dists])
    cum = [np.cumsum(d.sampling_probs) for d in dists]
    fdp = np.empty(trials)
    hit = np.empty(trials)
    for start in range(0, trials, batch):
        size = min(batch, trials - start)
        u = rng.random((size, len(dists)))
        pv = np.empty_like(u)
        for j, d in enumerate(dists):
            idx = np.minimum(np.searchsorted(cum[j], u[:, j], side="right"), d.values.size - 1)
            pv[:, j] = d.values[idx]
        mask = np.asarray(rule(pv), dtype=bool)
        v = (mask & truth).sum(axis=1)
        fdp[start:start + size] = v / np.maximum(mask.sum(axis=1), 1)
        hit[start:start + size] = v > 0
    scale = math.sqrt(trials)
    se = (lambda a: float(a.std(ddof=1) / scale) if trials > 1 else 0.0)
    return MonteCarloRates(float(fdp.mean()), se(fdp), float(hit.mean()), se(hit), trials)


# --- the worked counterexamples -------------------------------------------------


def counterexample_n4_dists() -> list[PointMassDist]:
    """Four nulls for which Heyse's DBH has FDR = FWER slightly above 0.05."""
    return [
        PointMassDist([0.05, 1.0], [0.05, 0.95]),
        PointMassDist([0.10, 1.0], [0.025, 0.975]),
        PointMassDist([0.15, 1.0], [0.025, 0.975]),
        PointMassDist([1.0], [1.0]),
    ]


def counterexample_n10_dists() -> list[PointMassDist]:
    """Ten-hypothesis extension: eight middle nulls with mass 0.00621 at 0.10, 0.15, ..., 0.45."""
    middle = [
        PointMassDist([round(0.10 + 0.05 * k, 2), 1.0], [0.00621, 1 - 0.00621])
        for k in range(8)
    ]
    return [counterexample_n4_dists()[0], *middle, PointMassDist([1.0], [1.0])]


def counterexample_n10(alpha: float = 0.05) -> tuple[list[PointMassDist], float]:
    dists = counterexample_n10_dists()
    return dists, exact_error_rates(dists, "DBH", alpha).fwer
