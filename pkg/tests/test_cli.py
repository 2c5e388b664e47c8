import csv
import io
import json

import numpy as np
import pytest

from discrete_fdr.cli import CountRecord, main, pooled_tests, read_counts, resolve
from discrete_fdr.dist import Table2x2, fisher_one_sided


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_pooled_table_construction():
    recs = [CountRecord("a", 3, 10), CountRecord("b", 1, 40), CountRecord("c", 0, 50)]
    pv, dists = pooled_tests(recs)
    # record a against the rest: events 3 vs 1, non-events 7 vs 89
    assert pv[0] == pytest.approx(fisher_one_sided(Table2x2(3, 1, 7, 89)), rel=1e-14)
    assert pv[0] in dists[0].support


def test_oracle_bundled(capsys):
    code, out, _ = run(["oracle", "counterexample-n4"], capsys)
    assert code == 0
    row = table(out)[0]
    assert float(row["fdr"]) == pytest.approx(0.05059375, abs=1e-10)
    assert row["fwer"] == "0.05059375"


def test_oracle_trace(capsys):
    code, out, _ = run(["oracle", "counterexample-n4", "--trace"], capsys)
    assert code == 0 and "0.0333,0.0333,0.0333" in out


def test_analyze_and_adjust_round_trip(tmp_path, capsys):
    d, a, b = tmp_path / "d.tsv", tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["analyze", "synthetic", "--full-precision", "--dists-out", d, "--out", a], capsys)[0] == 0
    assert run(["adjust", a, "--dists", d, "--full-precision", "--out", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_analyze_report(capsys):
    code, out, err = run(["analyze", "synthetic", "--top", 5, "--methods", "BY,DBY"], capsys)
    assert code == 0
    rows = table(out)
    assert len(rows) == 5 and set(rows[0]) == {"id", "pvalue", "adjusted_BY", "adjusted_DBY", "rejected_BY", "rejected_DBY"}
    assert all(len(r["adjusted_DBY"].split(".")[1]) == 4 for r in rows)
    assert "rejections at alpha=0.05: BY=" in err


def test_extreme_record_adjusts_to_zero(tmp_path, capsys):
    path = tmp_path / "c.csv"
    lines = ["id,event_count,total_count", "HOT,60,80"] + [f"D{i},{i % 3},{200 + i}" for i in range(40)]
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run(["analyze", path], capsys)
    hot = [r for r in table(out) if r["id"] == "HOT"][0]
    assert code == 0
    assert all(hot[k] == "0.0000" for k in hot if k.startswith("adjusted_"))


def test_single_record(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("id,event_count,total_count\nX,2,9\n")
    code, out, _ = run(["analyze", path, "--methods", "DBY"], capsys)
    assert code == 0 and table(out)[0]["adjusted_DBY"] == "1.0000"


def test_adjust_continuous_only(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("id,pvalue\nx,0.01\n")
    code, out, _ = run(["adjust", path, "--methods", "BY", "--full-precision"], capsys)
    assert code == 0 and float(table(out)[0]["adjusted_BY"]) == pytest.approx(0.01)


def test_adjust_with_counterexample_dists(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("id,pvalue\nH1,0.05\nH2,0.1\nH3,0.15\nH4,1.0\n")
    code, out, _ = run(["adjust", path, "--dists", "counterexample-n4", "--methods", "DBH"], capsys)
    assert code == 0
    assert [r["adjusted_DBH"] for r in table(out)] == ["0.0333", "0.0333", "0.0333", "1.0000"]


def test_discrete_method_needs_dists(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("id,pvalue\nx,0.01\n")
    code, _, err = run(["adjust", path, "--methods", "DBY"], capsys)
    assert code == 2 and "--dists" in err


@pytest.mark.parametrize(
    "body, message",
    [
        ("id,event_count,total_count\na,1,x\n", "line 2"),
        ("id,event_count,total_count\na,1,5\nb,7,5\n", "line 3"),
        ("id,event_count,total_count\na,1,5\na,1,5\n", "duplicate"),
        ("id,count\na,1\n", "header"),
        ("id,event_count,total_count\na,0,5\nb,0,5\n", "no events"),
    ],
)
def test_analyze_input_errors(tmp_path, capsys, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    code, _, err = run(["analyze", path], capsys)
    assert code == 1 and message in err


def test_missing_file(capsys):
    code, _, err = run(["oracle", "/nonexistent.tsv"], capsys)
    assert code == 1 and "error" in err


def test_gfun_uniform_ratio(tmp_path, capsys):
    path = tmp_path / "u.tsv"
    grid = ",".join(repr(k / 100) for k in range(1, 101))
    path.write_text("".join(f"U{i}\t{grid}\t{grid}\n" for i in range(4)))
    code, out, _ = run(["gfun", "--dists", path, "--lo", 0.0, "--hi", 1.0, "--points", 11], capsys)
    rows = table(out)
    assert code == 0 and rows[0]["ratio"] == ""
    assert all(float(r["ratio"]) == pytest.approx(1.0) for r in rows[1:])


def test_simulate_small_grid(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"N": [25], "m": [40], "trials": 4, "seed": 1}))
    code, out, _ = run(["simulate", path, "--methods", "DBY,BY"], capsys)
    rows = table(out)
    assert code == 0 and len(rows) == 27 and set(rows[0]) >= {"N", "m", "m3", "m1", "q3", "DBY", "BY"}
    again = run(["simulate", path, "--methods", "DBY,BY"], capsys)[1]
    assert again == out


def test_bundled_desk_grid_shape():
    spec = json.loads(resolve("desk").read_text())
    assert spec["trials"] == 500 and spec["N"] == [25]


def test_synthetic_counts_readable():
    recs = read_counts(resolve("synthetic"))
    assert len(recs) == 2446


def test_simulate_bundled_desk_grid_has_54_rows(capsys):
    code, out, _ = run(["simulate", "desk", "--trials", 2, "--methods", "BY"], capsys)
    assert code == 0 and len(table(out)) == 54
