"""Write a synthetic stand-in for the drug / amnesia report counts.

The real database extract is distributed elsewhere; this file has the same
shape (one row per drug: id, amnesia reports, all reports) so the analysis
path can be exercised end to end. Report totals are heavy tailed, the
background event rate is 0.3% and a few drugs carry a raised rate.
"""

import argparse
import csv

import numpy as np


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="src/discrete_fdr/data/synthetic_counts.csv")
    ap.add_argument("--drugs", type=int, default=2446)
    ap.add_argument("--signals", type=int, default=25)
    ap.add_argument("--rate", type=float, default=0.003)
    ap.add_argument("--seed", type=int, default=20160)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    totals = np.maximum(1, np.round(rng.lognormal(4.0, 2.0, args.drugs))).astype(int)
    totals = np.minimum(totals, 200_000)
    rr = np.ones(args.drugs)
    signal = rng.choice(args.drugs, size=args.signals, replace=False)
    rr[signal] = rng.uniform(3.0, 20.0, size=args.signals)
    events = rng.binomial(totals, np.minimum(args.rate * rr, 1.0))

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "event_count", "total_count"])
        for i, (e, t) in enumerate(zip(events, totals)):
            w.writerow([f"DRUG{i + 1:04d}", int(e), int(t)])
    print(f"wrote {args.drugs} rows, {events.sum()} events, {totals.sum()} reports to {args.out}")


if __name__ == "__main__":
    main()
