"""Random small discrete testing problems shared by several test modules."""

import numpy as np

from discrete_fdr.oracle import PointMassDist

GRID = 40  # atoms sit on multiples of 1/GRID so ties across hypotheses are common


def random_null(rng: np.random.Generator, max_atoms: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of a superuniform discrete p-value (F(u) <= u)."""
    k = int(rng.integers(1, max_atoms + 1))
    inner = np.sort(rng.choice(np.arange(1, GRID), size=k - 1, replace=False)) / GRID
    support = np.append(inner, 1.0)
    t = np.append(np.sort(rng.uniform(0.05, 0.95, size=k - 1)), 1.0)
    cdf = support * t
    return support, np.diff(cdf, prepend=0.0)


def random_instance(
    rng: np.random.Generator, max_n: int = 6, max_atoms: int = 4, false_share: float = 0.3
) -> list[PointMassDist]:
    """Independent hypotheses; false nulls draw from an arbitrary distribution on the same atoms."""
    n = int(rng.integers(1, max_n + 1))
    out = []
    for _ in range(n):
        support, probs = random_null(rng, max_atoms)
        if rng.random() < false_share:
            alt = rng.dirichlet(np.ones(support.size))
            out.append(PointMassDist(support, probs, truth=False, alt_probs=alt))
        else:
            out.append(PointMassDist(support, probs))
    return out
