"""Pick the block-closeness constant c1 for the n = 1024 diagonal audit.

Runs the canonical-alignment E event on pilot seeds (disjoint from the seed the
acceptance test uses) and keeps the smallest c1 on the grid whose E rate reaches
the target.  Writes scripts/pilots/diagonal_c1.json.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from malign.mc import diagonal_audit
from malign.scoring import SequenceDistribution, lcs_indicator

OUT = Path(__file__).with_name("pilots") / "diagonal_c1.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--alpha", type=float, default=4 / 7)
    ap.add_argument("--p-lo", type=float, default=0.5)
    ap.add_argument("--p-hi", type=float, default=2.0)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1001)
    ap.add_argument("--target", type=float, default=0.95)
    ap.add_argument("--grid", type=float, nargs="+", default=[0.05, 0.1, 0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    model = lcs_indicator(2, 2)
    dist = SequenceDistribution.uniform(2, 2)
    rows = []
    chosen = None
    for c1 in sorted(args.grid):
        a = diagonal_audit(model, dist, args.n, args.alpha, c1, args.p_lo, args.p_hi, args.seeds, seed=args.seed)
        f = np.array(a.good_fractions)
        rows.append(
            {
                "c1": c1,
                "epsilon": a.epsilon,
                "e_rate": a.e_rate,
                "inclusion_rate": a.inclusion_rate,
                "good_fraction_min": float(f.min()),
                "good_fraction_q05": float(np.quantile(f, 0.05)),
            }
        )
        print(rows[-1])
        if chosen is None and a.e_rate >= args.target:
            chosen = c1
    doc = {
        "n": args.n,
        "alpha": args.alpha,
        "p_lo": args.p_lo,
        "p_hi": args.p_hi,
        "pilot_seed": args.seed,
        "pilot_seeds": args.seeds,
        "target_e_rate": args.target,
        "c1": chosen,
        "grid": rows,
    }
    OUT.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"c1 = {chosen} -> {OUT}")


if __name__ == "__main__":
    main()
