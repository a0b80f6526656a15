"""Pilot for the Kolmogorov-distance threshold at n = 1600.

Estimates dk at each n with its DKW half-width on a pilot seed that the
acceptance test does not use, and records the threshold the test applies.
Writes scripts/pilots/clt_dk.json.
"""

import argparse
import json
import time
from pathlib import Path

from malign.mc import McConfig, clt_row
from malign.scoring import SequenceDistribution, lcs_indicator

OUT = Path(__file__).with_name("pilots") / "clt_dk.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[100, 1600])
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threshold", type=float, default=0.08)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    model = lcs_indicator(2, 2)
    dist = SequenceDistribution.uniform(2, 2)
    cfg = McConfig(seed=args.seed, replicates=args.reps, workers=args.workers)
    rows = []
    for n in args.n:
        t0 = time.perf_counter()
        r = clt_row(model, dist, n, cfg)
        rows.append(
            {
                "n": n,
                "dk": r.dk_hat,
                "dk_band": r.dk_band,
                "var_per_n": r.var_per_n,
                "skew": r.skewness,
                "kurt": r.excess_kurtosis,
                "seconds": round(time.perf_counter() - t0, 1),
            }
        )
        print(rows[-1])
    doc = {"pilot_seed": args.seed, "reps": args.reps, "threshold": args.threshold, "rows": rows}
    OUT.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"-> {OUT}")


if __name__ == "__main__":
    main()
