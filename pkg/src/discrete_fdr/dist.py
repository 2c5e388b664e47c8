"""Exact conditional null distributions for 2x2 tables.

Everything here conditions on both margins of the table, so the count in
the top-left cell is hypergeometric under the null of no association.
From that one distribution we get Fisher p-values and the full set of
attainable p-values together with their null CDF.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

Sidedness = Literal["one", "two"]

# pmf(x) <= pmf(observed) * (1 + TIE_TOLERANCE) counts as "at least as extreme"
TIE_TOLERANCE = 1e-7


class _LogFactorials:
    """log(k!) for k = 0..size-1, grown on demand and shared read-only."""

    def __init__(self) -> None:
        self._table = gammaln(np.arange(1024, dtype=float) + 1.0)
        self._table.flags.writeable = False

    def __call__(self, n: int) -> np.ndarray:
        if n >= self._table.size:
            size = max(n + 1, 2 * self._table.size)
            table = gammaln(np.arange(size, dtype=float) + 1.0)
            table.flags.writeable = False
            self._table = table
        return self._table


log_factorials = _LogFactorials()


@dataclass(frozen=True)
class Table2x2:
    """Cell counts; rows are groups, columns are event / non-event."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        cells = (self.a, self.b, self.c, self.d)
        if any(int(v) != v or v < 0 for v in cells):
            raise DomainError(f"cell counts must be non-negative integers: {cells}")
        if sum(cells) == 0:
            raise DomainError("table has no observations")

    @property
    def row1_total(self) -> int:
        return self.a + self.b

    @property
    def row2_total(self) -> int:
        return self.c + self.d

    @property
    def col1_total(self) -> int:
        return self.a + self.c

    @property
    def margins(self) -> tuple[int, int, int]:
        return self.row1_total, self.row2_total, self.col1_total


def _check_margins(row1_total: int, row2_total: int, col1_total: int) -> tuple[int, int, int]:
    margins = (row1_total, row2_total, col1_total)
    if any(int(v) != v or v < 0 for v in margins):
        raise DomainError(f"margins must be non-negative integers: {margins}")
    r1, r2, c1 = (int(v) for v in margins)
    if c1 > r1 + r2:
        raise DomainError(
            f"column total {c1} exceeds grand total {r1 + r2}"
        )
    return r1, r2, c1


def attainable_range(row1_total: int, row2_total: int, col1_total: int) -> tuple[int, int]:
    r1, r2, c1 = _check_margins(row1_total, row2_total, col1_total)
    return max(0, c1 - r2), min(r1, c1)


@lru_cache(maxsize=8192)
def _null_pmf(r1: int, r2: int, c1: int) -> tuple[int, np.ndarray]:
    lo, hi = max(0, c1 - r2), min(r1, c1)
    x = np.arange(lo, hi + 1)
    lf = log_factorials(r1 + r2)
    # the x-free part of log C(r1,x)C(r2,c1-x)/C(r1+r2,c1) cancels on normalising
    logw = -(lf[x] + lf[r1 - x] + lf[c1 - x] + lf[r2 - c1 + x])
    w = np.exp(logw - logw.max())
    pmf = w / w.sum()
    pmf.flags.writeable = False
    return lo, pmf


def hypergeom_pmf(x: int, row1_total: int, row2_total: int, col1_total: int) -> float:
    """P(X = x) for the top-left cell given all margins; 0 outside the range."""
    r1, r2, c1 = _check_margins(row1_total, row2_total, col1_total)
    lo, pmf = _null_pmf(r1, r2, c1)
    if x < lo or x >= lo + pmf.size:
        return 0.0
    return float(pmf[x - lo])


@dataclass(frozen=True)
class _PValueTable:
    lo: int
    pmf: np.ndarray
    pvalues: np.ndarray  # p-value of every attainable x, indexed by x - lo
    support: np.ndarray
    cdf: np.ndarray


def _one_sided(pmf: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tail = np.cumsum(pmf[::-1])[::-1]
    pvalues = tail / tail[0]
    # P(X >= x) is its own null CDF
    support = np.unique(pvalues[pmf > 0])
    return pvalues, support, support.copy()


def _two_sided(pmf: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(pmf, kind="stable")
    ascending = pmf[order]
    cumulative = np.cumsum(ascending)
    cumulative /= cumulative[-1]
    # number of tables no more likely than each observed one
    n_extreme = np.searchsorted(ascending, pmf * (1.0 + TIE_TOLERANCE), side="right")
    pvalues = cumulative[n_extreme - 1]
    support = np.unique(pvalues[pmf > 0])
    # {y : p(y) <= u} is a prefix of the likelihood ordering, so its mass is
    # read off the same cumulative array; this keeps F(u) <= u exact
    n_below = np.searchsorted(np.sort(pvalues), support, side="right")
    cdf = cumulative[n_below - 1]
    return pvalues, support, cdf


@lru_cache(maxsize=8192)
def _pvalue_table(r1: int, r2: int, c1: int, sidedness: str) -> _PValueTable:
    lo, pmf = _null_pmf(r1, r2, c1)
    if sidedness == "one":
        pvalues, support, cdf = _one_sided(pmf)
    elif sidedness == "two":
        pvalues, support, cdf = _two_sided(pmf)
    else:
        raise DomainError(f"sidedness must be 'one' or 'two', got {sidedness!r}")
    for arr in (pvalues, support, cdf):
        arr.flags.writeable = False
    return _PValueTable(lo, pmf, pvalues, support, cdf)


def pvalue_table(row1_total: int, row2_total: int, col1_total: int, sidedness: Sidedness = "two") -> _PValueTable:
    return _pvalue_table(*_check_margins(row1_total, row2_total, col1_total), sidedness)


def _fisher(t: Table2x2, sidedness: Sidedness) -> float:
    table = pvalue_table(*t.margins, sidedness)
    return float(table.pvalues[t.a - table.lo])


def fisher_one_sided(t: Table2x2) -> float:
    """Upper-tail Fisher p-value P(X >= a): excess events in row 1."""
    return _fisher(t, "one")


def fisher_two_sided(t: Table2x2) -> float:
    """Two-sided Fisher p-value, summing every table no more likely than ``t``.

    "No more likely" uses a relative tolerance of ``TIE_TOLERANCE`` so that
    tables tied in exact arithmetic stay tied after rounding.
    """
    return _fisher(t, "two")


@dataclass(frozen=True, eq=False)
class DiscretePValueDist:
    """Null distribution of one discrete p-value.

    ``support`` holds the attainable p-values in increasing order and
    ``cdf[i]`` is P(p <= support[i]) under the null. There is no mass at 0.
    """

    support: np.ndarray
    cdf: np.ndarray

    def __post_init__(self) -> None:
        support = np.array(self.support, dtype=float).reshape(-1)
        cdf = np.array(self.cdf, dtype=float).reshape(-1)
        if support.size == 0 or support.size != cdf.size:
            raise DomainError("support and cdf must be non-empty and of equal length")
        if support[0] <= 0.0 or support[-1] > 1.0 or np.any(np.diff(support) <= 0):
            raise DomainError("support must be strictly increasing inside (0, 1]")
        if cdf[0] <= 0.0 or np.any(np.diff(cdf) <= 0):
            raise DomainError("cdf must be positive and strictly increasing")
        if abs(cdf[-1] - 1.0) > 1e-12:
            raise DomainError(f"cdf must end at 1, ends at {cdf[-1]!r}")
        support.flags.writeable = False
        cdf.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cdf", cdf)
        if not self.is_superuniform():
            warnings.warn(
                "p-value distribution is not stochastically larger than uniform "
                "(F(u) > u somewhere); FDR bounds still hold since F(0) = 0",
                stacklevel=2,
            )

    def is_superuniform(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.cdf <= self.support + tol))

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cdf, prepend=0.0)

    def __len__(self) -> int:
        return self.support.size

    def __call__(self, x):
        """Right-continuous CDF evaluated at ``x`` (scalar or array)."""
        idx = np.searchsorted(self.support, x, side="right")
        values = np.concatenate(([0.0], self.cdf))[idx]
        return float(values) if np.ndim(values) == 0 else values

    @classmethod
    def point_mass_at_one(cls) -> "DiscretePValueDist":
        return cls([1.0], [1.0])

    @classmethod
    def from_atoms(cls, values: Iterable[float], probs: Iterable[float]) -> "DiscretePValueDist":
        values = np.asarray(list(values), dtype=float)
        probs = np.asarray(list(probs), dtype=float)
        order = np.argsort(values)
        cdf = np.cumsum(probs[order])
        return cls(values[order], cdf)

    @classmethod
    def uniform_grid(cls, points: int) -> "DiscretePValueDist":
        """Attainable values k/points with F(u) = u, the finest discrete uniform."""
        grid = np.arange(1, points + 1, dtype=float) / points
        return cls(grid, grid)


def pvalue_support(
    row1_total: int, row2_total: int, col1_total: int, sidedness: Sidedness = "two"
) -> DiscretePValueDist:
    """All attainable Fisher p-values for the given margins with their null CDF.

    Empty rows or columns leave a single attainable table, which gives the
    point mass at p = 1.
    """
    table = pvalue_table(row1_total, row2_total, col1_total, sidedness)
    return DiscretePValueDist(table.support, table.cdf)


# --- text serialisation -----------------------------------------------------
#
# One record per line, tab separated:
#   id <TAB> support <TAB> cdf [<TAB> truth [<TAB> alternative probabilities]]
# where support / cdf / probabilities are comma-separated decimals. Floats are
# written with repr so a write/read cycle is bit-exact.


@dataclass(frozen=True, eq=False)
class DistRecord:
    id: str
    dist: DiscretePValueDist
    truth: bool = True
    alt_probs: np.ndarray | None = None


def _fmt(values: Iterable[float]) -> str:
    return ",".join(repr(float(v)) for v in values)


def format_record(rec: DistRecord) -> str:
    fields = [rec.id, _fmt(rec.dist.support), _fmt(rec.dist.cdf)]
    if not rec.truth or rec.alt_probs is not None:
        fields.append("1" if rec.truth else "0")
    if rec.alt_probs is not None:
        fields.append(_fmt(rec.alt_probs))
    return "\t".join(fields)


def parse_record(line: str, lineno: int | None = None) -> DistRecord:
    where = f"line {lineno}: " if lineno is not None else ""
    fields = line.rstrip("\n").split("\t")
    if len(fields) < 3 or len(fields) > 5:
        raise DomainError(f"{where}expected 3 to 5 tab-separated fields, got {len(fields)}")
    try:
        support = [float(v) for v in fields[1].split(",")]
        cdf = [float(v) for v in fields[2].split(",")]
        truth = True
        if len(fields) >= 4:
            if fields[3] not in ("0", "1"):
                raise ValueError(f"truth flag must be 0 or 1, got {fields[3]!r}")
            truth = fields[3] == "1"
        alt = np.array([float(v) for v in fields[4].split(",")]) if len(fields) == 5 else None
        dist = DiscretePValueDist(support, cdf)
    except ValueError as exc:
        raise DomainError(f"{where}{exc}") from exc
    if alt is not None and alt.size != len(dist):
        raise DomainError(f"{where}alternative probabilities do not match the support")
    return DistRecord(fields[0], dist, truth, alt)


def write_dists(path: str | Path, records: Iterable[DistRecord]) -> None:
    with open(path, "w") as fh:
        fh.write("# id\tsupport\tcdf\t[truth]\t[alternative probabilities]\n")
        for rec in records:
            fh.write(format_record(rec) + "\n")


def read_dists(path: str | Path) -> list[DistRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            records.append(parse_record(line, lineno))
    if not records:
        raise DomainError(f"{path}: no distribution records")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise DomainError(f"{path}: duplicate ids")
    return records
