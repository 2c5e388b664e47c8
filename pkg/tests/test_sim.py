import json

import numpy as np
import pytest

from discrete_fdr import sim
from discrete_fdr.errors import DomainError
from discrete_fdr.procedures import apply
from discrete_fdr.dist import fisher_two_sided, Table2x2, pvalue_support
from discrete_fdr.stepfun import aggregate


def small(**kw):
    base = dict(N=25, m=60, m3=12, m1=16, q3=0.4, trials=20, seed=11)
    base.update(kw)
    return sim.SimConfig(**base)


def test_config_layout():
    cfg = sim.SimConfig.from_fractions(25, 800, 0.1, 0.2, 0.4)
    assert (cfg.m3, cfg.m1, cfg.m2) == (80, 144, 576)
    p1, p2 = cfg.probabilities()
    assert np.all(p1[:144] == 0.01) and np.all(p1[144:] == 0.10)
    assert np.all(p2[-80:] == 0.4) and cfg.false_nulls.sum() == 80


def test_grid_order_and_size():
    grid = sim.standard_grid(25)
    assert len(grid) == 54
    assert [(c.m, c.m3, c.m1, c.q3) for c in grid[:4]] == [
        (800, 80, 144, 0.15), (800, 80, 144, 0.25), (800, 80, 144, 0.4), (800, 80, 360, 0.15)
    ]


@pytest.mark.parametrize("bad", [dict(m1=50, m3=20), dict(q3=1.0), dict(N=0), dict(trials=0), dict(m1=-1)])
def test_invalid_configs(bad):
    with pytest.raises(DomainError):
        small(**bad)


def test_trial_pvalues_and_g_match_direct_computation():
    cfg = small()
    pv, g = sim.simulate_trial(cfg, 3)
    # rebuild the same counts from the documented streams
    bounds = (0, cfg.m1, cfg.m - cfg.m3, cfg.m)
    p1, p2 = cfg.probabilities()
    x1, x2 = np.empty(cfg.m, int), np.empty(cfg.m, int)
    for rng, lo, hi in zip(sim.trial_streams(cfg.seed, 3), bounds[:-1], bounds[1:]):
        x1[lo:hi] = rng.binomial(cfg.N, p1[lo:hi])
        x2[lo:hi] = rng.binomial(cfg.N, p2[lo:hi])
    want = [fisher_two_sided(Table2x2(a, cfg.N - a, b, cfg.N - b)) if a + b > 0 else 1.0 for a, b in zip(x1, x2)]
    np.testing.assert_allclose(pv, want, rtol=1e-12)
    direct = aggregate([pvalue_support(cfg.N, cfg.N, a + b) for a, b in zip(x1, x2)])
    np.testing.assert_array_equal(g.jumps, direct.jumps)
    np.testing.assert_allclose(g.values, direct.values, rtol=1e-12)


def test_power_and_fdp_bookkeeping():
    cfg = small(trials=5)
    res = sim.run_config(cfg, ["DBY", "BH"])
    for t in range(cfg.trials):
        pv, g = sim.simulate_trial(cfg, t)
        out = apply("DBY", pv, cfg.alpha, g)
        true_hits = (out.rejected & cfg.false_nulls).sum()
        assert res.per_trial["power_DBY"][t] == true_hits / cfg.m3
        assert res.per_trial["fdp_DBY"][t] == (out.k - true_hits) / max(out.k, 1)
    assert res.power["DBY"] == pytest.approx(res.per_trial["power_DBY"].mean())


def test_reproducible_and_parallel_invariant():
    grid = [small(), small(m1=30, q3=0.25)]
    a = sim.run_suite(grid, ["DBY", "BY"])
    b = sim.run_suite(grid, ["DBY", "BY"], parallelism=2)
    for x, y in zip(a, b):
        assert x.power == y.power and x.fdr == y.fdr
    c = sim.run_suite([small(seed=12)], ["DBY"])
    assert c[0].per_trial["power_DBY"].tolist() != a[0].per_trial["power_DBY"].tolist()


def test_common_random_numbers_across_m1():
    # alternative positions see the same data whatever m1 is
    a, _ = sim.simulate_trial(small(m1=10), 0)
    b, _ = sim.simulate_trial(small(m1=40), 0)
    np.testing.assert_array_equal(a[-12:], b[-12:])


def test_plugin_column():
    never = lambda p, g, alpha: np.zeros(p.shape, bool)
    res = sim.run_config(small(trials=3), ["BH"], plugins={"DBL": never})
    assert res.power["DBL"] == 0.0
    assert sim.format_table([res]).splitlines()[0] == "N,m,m3,m1,q3,BH,DBL"


def test_complete_null_fdr_is_controlled():
    cfg = sim.complete_null_config(small(trials=200, m=100, m3=10, m1=20))
    res = sim.run_config(cfg, ["DBY", "DSarkar", "BY"])
    for k in ("DBY", "DSarkar", "BY"):
        assert res.fdr[k] <= 0.05 + 3 * res.fdr_se[k]
        assert np.isnan(res.power[k])


def test_load_grid(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"N": [25], "m": [100], "trials": 7, "seed": 3, "complete_null": True}))
    grid, methods = sim.load_grid(path)
    assert len(grid) == 28 and grid[-1].m3 == 0 and all(c.trials == 7 for c in grid)
    path.write_text(json.dumps({"N": [25], "bogus": 1}))
    with pytest.raises(DomainError):
        sim.load_grid(path)
    path.write_text(json.dumps({"methods": ["Holm"]}))
    with pytest.raises(DomainError):
        sim.load_grid(path)


def test_format_table_columns():
    res = sim.run_config(small(trials=3))
    text = sim.format_table([res], include_se=True)
    header = text.splitlines()[0].split(",")
    assert header[:11] == ["N", "m", "m3", "m1", "q3", "DBH", "BH", "DBY", "BY", "DSarkar", "Sarkar"]
    assert header[11] == "se_DBH"
