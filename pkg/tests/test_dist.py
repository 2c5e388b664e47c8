import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import hypergeom

from discrete_fdr.dist import (
    DiscretePValueDist,
    DistRecord,
    Table2x2,
    attainable_range,
    fisher_one_sided,
    fisher_two_sided,
    format_record,
    hypergeom_pmf,
    parse_record,
    pvalue_support,
    pvalue_table,
    read_dists,
    write_dists,
)
from discrete_fdr.errors import DomainError

margins = st.tuples(st.integers(0, 60), st.integers(0, 60)).flatmap(
    lambda rr: st.tuples(st.just(rr[0]), st.just(rr[1]), st.integers(0, rr[0] + rr[1]))
).filter(lambda m: m[0] + m[1] > 0)


def tables():
    return st.tuples(*[st.integers(0, 40)] * 4).filter(lambda c: sum(c) > 0).map(lambda c: Table2x2(*c))


# --- hypergeometric pmf ----------------------------------------------------------


@given(margins)
def test_pmf_matches_scipy(m):
    r1, r2, c1 = m
    lo, hi = attainable_range(r1, r2, c1)
    x = np.arange(lo, hi + 1)
    ours = np.array([hypergeom_pmf(int(v), r1, r2, c1) for v in x])
    np.testing.assert_allclose(ours, hypergeom.pmf(x, r1 + r2, r1, c1), rtol=1e-9, atol=1e-300)


def test_pmf_outside_range_is_zero():
    assert hypergeom_pmf(5, 3, 3, 3) == 0.0
    assert hypergeom_pmf(-1, 3, 3, 3) == 0.0


def test_pmf_large_margins_still_normalised():
    lo, hi = attainable_range(2051, 3_000_000, 20_000)
    total = math.fsum(hypergeom_pmf(x, 2051, 3_000_000, 20_000) for x in range(lo, hi + 1))
    assert total == pytest.approx(1.0, abs=1e-12)


# --- Fisher p-values -------------------------------------------------------------


def test_two_by_two_example():
    t = Table2x2(2, 0, 0, 2)
    assert fisher_two_sided(t) == pytest.approx(1 / 3)
    assert fisher_one_sided(t) == pytest.approx(1 / 6)


def test_symmetric_margins_support():
    d = pvalue_support(2, 2, 2, "two")
    np.testing.assert_allclose(d.support, [1 / 3, 1.0])
    np.testing.assert_allclose(d.cdf, [1 / 3, 1.0])
    one = pvalue_support(2, 2, 2, "one")
    np.testing.assert_allclose(one.support, [1 / 6, 5 / 6, 1.0])


def test_degenerate_margins_give_point_mass_at_one():
    for m in [(5, 0, 3), (0, 4, 2), (3, 3, 0), (3, 3, 6)]:
        d = pvalue_support(*m)
        assert d.support.tolist() == [1.0] and d.cdf.tolist() == [1.0]


@given(tables())
def test_one_sided_matches_scipy(t):
    from scipy.stats import fisher_exact

    _, p = fisher_exact([[t.a, t.b], [t.c, t.d]], alternative="greater")
    assert fisher_one_sided(t) == pytest.approx(p, rel=1e-9)


@given(tables())
def test_two_sided_matches_scipy(t):
    from scipy.stats import fisher_exact

    _, p = fisher_exact([[t.a, t.b], [t.c, t.d]], alternative="two-sided")
    assert fisher_two_sided(t) == pytest.approx(min(p, 1.0), rel=1e-7)


@given(tables())
def test_observed_pvalue_is_in_support(t):
    for side, f in (("one", fisher_one_sided), ("two", fisher_two_sided)):
        d = pvalue_support(*t.margins, side)
        assert f(t) in set(d.support.tolist())


@given(margins, st.sampled_from(["one", "two"]))
def test_support_is_superuniform_and_exact(m, side):
    table = pvalue_table(*m, side)
    d = DiscretePValueDist(table.support, table.cdf)
    assert d.is_superuniform(tol=0.0)
    # CDF at each support point is the null mass of p-values at or below it
    for u, f in zip(d.support, d.cdf):
        mass = math.fsum(table.pmf[table.pvalues <= u])
        assert f == pytest.approx(mass, abs=1e-12)


def test_swapping_rows_keeps_two_sided_pvalue():
    for a, b, c, d in [(3, 7, 5, 1), (0, 4, 9, 2), (10, 10, 3, 17)]:
        assert fisher_two_sided(Table2x2(a, b, c, d)) == pytest.approx(fisher_two_sided(Table2x2(c, d, a, b)), rel=1e-12)


@pytest.mark.parametrize("cells", [(-1, 0, 0, 1), (0, 0, 0, 0), (1.5, 0, 0, 1)])
def test_bad_tables_rejected(cells):
    with pytest.raises(DomainError):
        Table2x2(*cells)


def test_one_sided_exact_small_case():
    # margins (3, 4, 3): P(X >= 2) = (C(3,2)C(4,1) + C(3,3)) / C(7,3) = 13/35
    assert fisher_one_sided(Table2x2(2, 1, 1, 3)) == pytest.approx(float(Fraction(13, 35)), rel=1e-14)


# --- DiscretePValueDist ---------------------------------------------------------------


def test_dist_validation():
    with pytest.raises(DomainError):
        DiscretePValueDist([0.5, 0.4], [0.2, 1.0])
    with pytest.raises(DomainError):
        DiscretePValueDist([0.0, 1.0], [0.1, 1.0])
    with pytest.raises(DomainError):
        DiscretePValueDist([0.5, 1.0], [0.2, 0.9])
    with pytest.raises(DomainError):
        DiscretePValueDist([], [])


def test_non_superuniform_warns():
    with pytest.warns(UserWarning):
        DiscretePValueDist([0.1, 1.0], [0.5, 1.0])


def test_cdf_is_right_continuous():
    d = DiscretePValueDist([0.2, 0.5, 1.0], [0.1, 0.4, 1.0])
    assert d(0.0) == 0.0 and d(0.1999) == 0.0 and d(0.2) == 0.1
    np.testing.assert_array_equal(d(np.array([0.5, 0.7, 1.0])), [0.4, 0.4, 1.0])
    np.testing.assert_allclose(d.probabilities, [0.1, 0.3, 0.6])


def test_uniform_grid():
    d = DiscretePValueDist.uniform_grid(4)
    assert d.support.tolist() == [0.25, 0.5, 0.75, 1.0] == d.cdf.tolist()


# --- serialisation ---------------------------------------------------------------


@given(margins, st.sampled_from(["one", "two"]), st.booleans())
@settings(max_examples=50)
def test_record_round_trip_is_bit_exact(m, side, truth):
    d = pvalue_support(*m, side)
    alt = None if truth else np.full(len(d), 1.0 / len(d))
    rec = parse_record(format_record(DistRecord("x", d, truth, alt)))
    assert rec.dist.support.tobytes() == d.support.tobytes()
    assert rec.dist.cdf.tobytes() == d.cdf.tobytes()
    assert rec.truth == truth


def test_file_round_trip(tmp_path):
    recs = [DistRecord(f"T{i}", pvalue_support(5, 7, i)) for i in range(1, 6)]
    path = tmp_path / "d.tsv"
    write_dists(path, recs)
    back = read_dists(path)
    assert [r.id for r in back] == [r.id for r in recs]
    for a, b in zip(recs, back):
        assert np.array_equal(a.dist.cdf, b.dist.cdf)


def test_parse_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\t0.5,1.0\t0.5,1.0\nb\t0.5,oops\t0.5,1.0\n")
    with pytest.raises(DomainError, match="line 2"):
        read_dists(path)
    path.write_text("a\t1.0\t1.0\na\t1.0\t1.0\n")
    with pytest.raises(DomainError, match="duplicate"):
        read_dists(path)
