"""The aggregated null CDF G(x) = F_1(x) + ... + F_n(x) as a step function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import DiscretePValueDist
from .errors import DomainError


def compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Running sums with the rounding error of every step carried forward.

    Each partial sum of ``np.cumsum`` is exact up to a TwoSum error term that
    can be recovered in closed form; adding the running total of those errors
    gives cascaded (Kahan-Babuska style) accuracy without a Python loop.
    """
    x = np.asarray(x, dtype=float)
    s = np.cumsum(x)
    prev = np.concatenate(([0.0], s[:-1]))
    bb = s - prev
    err = (prev - (s - bb)) + (x - bb)
    return s + np.cumsum(err)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function with jumps in (0, 1].

    ``values[i]`` is G at ``jumps[i]``; G is 0 below the first jump. Values
    are nondecreasing (sub-ulp masses can leave two consecutive values
    equal in floating point) and end at ``n``.
    """

    jumps: np.ndarray
    values: np.ndarray
    n: int

    def __post_init__(self) -> None:
        for arr in (self.jumps, self.values):
            arr.flags.writeable = False

    def __call__(self, x):
        return evaluate(self, x)


def aggregate(
    dists: Sequence[DiscretePValueDist], weights: Sequence[float] | None = None
) -> StepFunction:
    """Sum the CDFs of ``dists``.

    ``weights`` gives the multiplicity of each distribution (so a list of
    distinct margins with counts can stand in for the full list); ``n`` is
    the total weight.
    """
    if len(dists) == 0:
        raise DomainError("cannot aggregate an empty list of distributions")
    if weights is None:
        weights = np.ones(len(dists))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(dists),) or np.any(weights < 0):
        raise DomainError("weights must be non-negative, one per distribution")

    keep = weights > 0
    points = np.concatenate([d.support for d, k in zip(dists, keep) if k])
    masses = np.concatenate([w * d.probabilities for d, w, k in zip(dists, weights, keep) if k])
    order = np.argsort(points, kind="stable")
    points = points[order]
    running = compensated_cumsum(masses[order])

    last_of_run = np.ones(points.size, dtype=bool)
    last_of_run[:-1] = points[1:] != points[:-1]
    n = weights.sum()
    n = int(n) if float(n).is_integer() else n
    return StepFunction(points[last_of_run], running[last_of_run], n)


def evaluate(g: StepFunction, x):
    """G(x), right-continuous, by binary search over the jumps."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa >= 0.0) | (xa > 1.0)):
        raise DomainError("G is only defined on [0, 1]")
    idx = np.searchsorted(g.jumps, xa, side="right")
    out = np.concatenate(([0.0], g.values))[idx]
    return float(out) if out.ndim == 0 else out


def ratio_grid(g: StepFunction, lo: float, hi: float, points: int) -> np.ndarray:
    """Evenly spaced ``(x, G(x), n*x)`` rows on [lo, hi] for plotting G against n*x."""
    if not (0.0 <= lo < hi <= 1.0) or points < 2:
        raise DomainError(f"need 0 <= lo < hi <= 1 and points >= 2, got {lo}, {hi}, {points}")
    x = np.linspace(lo, hi, points)
    return np.column_stack([x, evaluate(g, x), g.n * x])


def format_grid(rows: np.ndarray) -> str:
    lines = ["x,G,Gunif,ratio"]
    for x, gx, ux in rows.tolist():
        ratio = repr(gx / ux) if ux > 0 else ""
        lines.append(f"{x!r},{gx!r},{ux!r},{ratio}")
    return "\n".join(lines) + "\n"
