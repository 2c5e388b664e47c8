"""Exact FDR of Heyse's discrete BH on the four- and ten-hypothesis counterexamples.

Prints the FDR / FWER of each method and the outcome-by-outcome table for
the four-hypothesis case.
"""

from discrete_fdr.oracle import counterexample_n4_dists, counterexample_n10_dists, exact_error_rates, format_trace
from discrete_fdr.procedures import METHODS


def main() -> None:
    for name, dists in (("n=4", counterexample_n4_dists()), ("n=10", counterexample_n10_dists())):
        print(f"{name}: {len(dists)} hypotheses, all nulls true")
        for method in METHODS:
            r = exact_error_rates(dists, method, 0.05)
            flag = "  <- above 0.05" if r.fdr > 0.05 else ""
            print(f"  {method:8s} FDR={r.fdr:.8f} FWER={r.fwer:.8f}{flag}")
    print()
    print(format_trace(exact_error_rates(counterexample_n4_dists(), "DBH", 0.05, trace=True).trace), end="")


if __name__ == "__main__":
    main()
