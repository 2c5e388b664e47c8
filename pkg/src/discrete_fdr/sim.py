"""Monte Carlo power study with two groups of sparse binary responses.

Each of m positions is a Bernoulli response observed on N subjects per
group. Positions 0..m1-1 have success probability 0.01 in both groups,
the next m2 have 0.10 in both, and the last m3 have 0.10 in group 1 and
q3 in group 2. Every position is tested with a two-sided Fisher exact test
and the discrete procedures use the conditional null distributions given
each position's observed margins.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .dist import DiscretePValueDist, pvalue_table
from .errors import DomainError
from .procedures import METHODS, reject
from .stepfun import StepFunction, aggregate

SPARSE_NULL_PROB = 0.01
DENSE_NULL_PROB = 0.10
TABLE_Q3 = (0.15, 0.25, 0.4)

# column order of the standard power tables; DBL only appears with a plug-in
TABLE_ORDER = ("DBH", "BH", "DBL", "DBY", "BY", "DSarkar", "Sarkar")

PlugIn = Callable[[np.ndarray, StepFunction, float], np.ndarray]


@dataclass(frozen=True)
class SimConfig:
    N: int
    m: int
    m3: int
    m1: int
    q3: float
    trials: int = 500
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if self.N < 1 or self.trials < 1:
            raise DomainError("group size and trial count must be positive")
        if min(self.m1, self.m3) < 0 or self.m1 + self.m3 > self.m:
            raise DomainError(f"invalid position counts m={self.m}, m1={self.m1}, m3={self.m3}")
        if not 0.0 < self.q3 < 1.0 or not 0.0 < self.alpha < 1.0:
            raise DomainError("q3 and alpha must lie in (0, 1)")

    @property
    def m2(self) -> int:
        return self.m - self.m1 - self.m3

    @classmethod
    def from_fractions(
        cls, N: int, m: int, m3_fraction: float, m1_fraction: float, q3: float, **kw
    ) -> "SimConfig":
        """m3 as a share of m, m1 as a share of the m - m3 true nulls."""
        m3 = round(m * m3_fraction)
        m1 = round((m - m3) * m1_fraction)
        return cls(N, m, m3, m1, q3, **kw)

    def probabilities(self) -> tuple[np.ndarray, np.ndarray]:
        p1 = np.full(self.m, DENSE_NULL_PROB)
        p1[: self.m1] = SPARSE_NULL_PROB
        p2 = p1.copy()
        p2[self.m - self.m3:] = self.q3
        return p1, p2

    @property
    def false_nulls(self) -> np.ndarray:
        p1, p2 = self.probabilities()
        return p1 != p2


@dataclass(frozen=True, eq=False)
class SimResult:
    config: SimConfig
    power: dict[str, float]
    power_se: dict[str, float]
    fdr: dict[str, float]
    fdr_se: dict[str, float]
    trials: int
    per_trial: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(self.power)


@dataclass(frozen=True, eq=False)
class _Margins:
    pvalues: np.ndarray  # [column total, group-1 count] -> two-sided p-value
    dists: tuple[DiscretePValueDist, ...]  # indexed by column total


@lru_cache(maxsize=None)
def _margin_tables(N: int) -> _Margins:
    pv = np.full((2 * N + 1, N + 1), np.nan)
    dists = []
    for t in range(2 * N + 1):
        table = pvalue_table(N, N, t, "two")
        pv[t, table.lo: table.lo + table.pvalues.size] = table.pvalues
        dists.append(DiscretePValueDist(table.support, table.cdf))
    pv.flags.writeable = False
    return _Margins(pv, tuple(dists))


def trial_streams(master: int, trial: int) -> list[np.random.Generator]:
    """Generators for the sparse-null, dense-null and alternative positions of one trial.

    Streams are keyed by (master seed, trial, position group) only, so every
    configuration sees common random numbers: changing m1 leaves the data
    at the alternative positions untouched.
    """
    root = np.random.SeedSequence(entropy=master, spawn_key=(trial,))
    return [np.random.default_rng(s) for s in root.spawn(3)]


def simulate_trial(cfg: SimConfig, trial: int) -> tuple[np.ndarray, StepFunction]:
    """One data set: Fisher p-values for every position and the matching G."""
    p1, p2 = cfg.probabilities()
    bounds = (0, cfg.m1, cfg.m - cfg.m3, cfg.m)
    x1 = np.empty(cfg.m, dtype=np.int64)
    x2 = np.empty(cfg.m, dtype=np.int64)
    for rng, lo, hi in zip(trial_streams(cfg.seed, trial), bounds[:-1], bounds[1:]):
        x1[lo:hi] = rng.binomial(cfg.N, p1[lo:hi])
        x2[lo:hi] = rng.binomial(cfg.N, p2[lo:hi])
    margins = _margin_tables(cfg.N)
    col = x1 + x2
    pvalues = margins.pvalues[col, x1]
    counts = np.bincount(col, minlength=2 * cfg.N + 1)
    present = np.flatnonzero(counts)
    g = aggregate([margins.dists[t] for t in present], counts[present])
    return pvalues, g


def run_config(
    cfg: SimConfig,
    methods: Sequence[str] = METHODS,
    plugins: Mapping[str, PlugIn] | None = None,
) -> SimResult:
    """Average power and FDP of each method over ``cfg.trials`` data sets.

    ``plugins`` maps extra column names to rejection rules
    ``(pvalues, G, alpha) -> mask``.
    """
    rules: dict[str, Callable[[np.ndarray, StepFunction], np.ndarray]] = {
        name: (lambda p, g, name=name: reject(name, p, cfg.alpha, g)) for name in methods
    }
    for name, fn in (plugins or {}).items():
        rules[name] = lambda p, g, fn=fn: np.asarray(fn(p, g, cfg.alpha), dtype=bool)

    false_null = cfg.false_nulls
    n_false = int(false_null.sum())
    power = {name: np.empty(cfg.trials) for name in rules}
    fdp = {name: np.empty(cfg.trials) for name in rules}
    for t in range(cfg.trials):
        pvalues, g = simulate_trial(cfg, t)
        for name, rule in rules.items():
            mask = rule(pvalues, g)
            r = mask.sum()
            v = r - (mask & false_null).sum()
            power[name][t] = (r - v) / n_false if n_false else np.nan
            fdp[name][t] = v / max(r, 1)

    scale = math.sqrt(cfg.trials)

    def se(a: np.ndarray) -> float:
        return float(a.std(ddof=1) / scale) if cfg.trials > 1 else 0.0

    return SimResult(
        cfg,
        {k: float(v.mean()) for k, v in power.items()},
        {k: se(v) for k, v in power.items()},
        {k: float(v.mean()) for k, v in fdp.items()},
        {k: se(v) for k, v in fdp.items()},
        cfg.trials,
        per_trial={**{f"power_{k}": v for k, v in power.items()}, **{f"fdp_{k}": v for k, v in fdp.items()}},
    )


def _run_job(args):
    return run_config(*args)


def run_suite(
    grid: Sequence[SimConfig],
    methods: Sequence[str] = METHODS,
    plugins: Mapping[str, PlugIn] | None = None,
    parallelism: int = 1,
) -> list[SimResult]:
    """Run every config of ``grid``, optionally in worker processes.

    Results depend only on each config's seed, never on ``parallelism``.
    Plug-ins must be picklable when running in parallel.
    """
    if not grid:
        raise DomainError("empty simulation grid")
    jobs = [(cfg, tuple(methods), plugins) for cfg in grid]
    if parallelism <= 1:
        return [_run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_job, jobs))


def standard_grid(
    N: int, trials: int = 500, seed: int = 0, alpha: float = 0.05,
    m_values: Sequence[int] = (800, 2000),
    m3_fractions: Sequence[float] = (0.1, 0.3, 0.6),
    m1_fractions: Sequence[float] = (0.2, 0.5, 0.8),
    q3_values: Sequence[float] = TABLE_Q3,
) -> list[SimConfig]:
    """The 2 x 3 x 3 x 3 = 54 configurations, in the usual table order."""
    return [
        SimConfig.from_fractions(N, m, f3, f1, q, trials=trials, seed=seed, alpha=alpha)
        for m, f3, f1, q in itertools.product(m_values, m3_fractions, m1_fractions, q3_values)
    ]


def complete_null_config(cfg: SimConfig) -> SimConfig:
    """``cfg`` with the alternative switched off (group 2 matches group 1 everywhere)."""
    return replace(cfg, q3=DENSE_NULL_PROB)


def load_grid(path: str | Path) -> tuple[list[SimConfig], list[str]]:
    """Read a JSON grid description.

    Keys: ``N`` (list), ``m``, ``m3_fraction``, ``m1_fraction``, ``q3``
    (lists, defaulting to the standard grid), ``trials``, ``seed``,
    ``alpha``, ``methods`` and ``complete_null`` (append one all-null
    config per N and m).
    """
    with open(path) as fh:
        spec = json.load(fh)
    unknown = set(spec) - {
        "N", "m", "m3_fraction", "m1_fraction", "q3", "trials", "seed", "alpha",
        "methods", "complete_null",
    }
    if unknown:
        raise DomainError(f"{path}: unknown keys {sorted(unknown)}")
    common = dict(
        trials=int(spec.get("trials", 500)),
        seed=int(spec.get("seed", 0)),
        alpha=float(spec.get("alpha", 0.05)),
    )
    grid: list[SimConfig] = []
    for N in spec.get("N", [25]):
        grid += standard_grid(
            int(N),
            m_values=spec.get("m", (800, 2000)),
            m3_fractions=spec.get("m3_fraction", (0.1, 0.3, 0.6)),
            m1_fractions=spec.get("m1_fraction", (0.2, 0.5, 0.8)),
            q3_values=spec.get("q3", TABLE_Q3),
            **common,
        )
        if spec.get("complete_null", False):
            for m in spec.get("m", (800, 2000)):
                grid.append(SimConfig(int(N), int(m), 0, round(0.2 * m), DENSE_NULL_PROB, **common))
    methods = list(spec.get("methods", METHODS))
    for name in methods:
        if name not in METHODS:
            raise DomainError(f"{path}: unknown method {name!r}")
    return grid, methods


def format_table(results: Sequence[SimResult], include_se: bool = False) -> str:
    """Power table: N, m, m3, m1, q3 then methods in the standard column order."""
    present = set(results[0].methods)
    cols = [c for c in TABLE_ORDER if c in present] + [c for c in results[0].methods if c not in TABLE_ORDER]
    header = ["N", "m", "m3", "m1", "q3"] + cols
    if include_se:
        header += [f"se_{c}" for c in cols]
    lines = [",".join(header)]
    for res in results:
        c = res.config
        row = [str(c.N), str(c.m), str(c.m3), str(c.m1), f"{c.q3:g}"]
        row += [f"{res.power[k]:.4f}" for k in cols]
        if include_se:
            row += [f"{res.power_se[k]:.4f}" for k in cols]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
