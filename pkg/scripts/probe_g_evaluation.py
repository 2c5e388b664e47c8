"""Diagnostic: how the N=25 power of DBY / DSarkar depends on where G is read.

The discrete step-up compares each sorted p-value with critical values c_i
satisfying G(c_i) <= y_i, which is what guarantees FDR control. An
implementation that instead compares G just *below* the observed p-value
(the left limit G(p-)) with y_i rejects more: every p-value sitting exactly
on an attainable value is judged by the mass strictly below it. This script
runs both readings side by side on a few cells so the size of the effect
can be compared with reference tables. Only the first reading is used by
the package.
"""

import argparse

import numpy as np

from discrete_fdr import sim
from discrete_fdr.procedures import ProcedureSpec, reject


def left_limit_reject(method: str, pv: np.ndarray, g, alpha: float) -> np.ndarray:
    n = pv.size
    spec = ProcedureSpec.by(n, alpha) if method == "DBY" else ProcedureSpec.sarkar(n, alpha)
    order = np.argsort(pv, kind="stable")
    s = pv[order]
    idx = np.searchsorted(g.jumps, s, side="left")
    below = np.concatenate(([0.0], g.values))[idx]
    ok = np.flatnonzero(below <= spec.targets)
    k = ok[-1] + 1 if ok.size else 0
    mask = np.zeros(n, bool)
    mask[order[:k]] = True
    return mask


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=25)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=2016)
    args = ap.parse_args()

    cells = [(800, 80, 144, 0.4), (800, 80, 144, 0.25), (800, 480, 64, 0.4), (2000, 1200, 640, 0.4)]
    print("m,m3,m1,q3,DBY,DBY_left,DSarkar,DSarkar_left")
    for m, m3, m1, q3 in cells:
        cfg = sim.SimConfig(args.N, m, m3, m1, q3, trials=args.trials, seed=args.seed)
        acc = np.zeros(4)
        for t in range(cfg.trials):
            pv, g = sim.simulate_trial(cfg, t)
            masks = [
                reject("DBY", pv, cfg.alpha, g),
                left_limit_reject("DBY", pv, g, cfg.alpha),
                reject("DSarkar", pv, cfg.alpha, g),
                left_limit_reject("DSarkar", pv, g, cfg.alpha),
            ]
            acc += [(mk & cfg.false_nulls).sum() / m3 for mk in masks]
        print(f"{m},{m3},{m1},{q3:g}," + ",".join(f"{v:.4f}" for v in acc / cfg.trials))


if __name__ == "__main__":
    main()
