"""Honest words on the synchronous path over n and f, with the three fits.

    python scripts/sync_cost_sweep.py --n 4 7 10 13 16 --seeds 5
"""

import argparse

from optimistic_ba import checks
from optimistic_ba.adversary import BEHAVIORS
from optimistic_ba.experiment import default_t, quantiles
from optimistic_ba.simnet import RunConfig, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", nargs="+", type=int, default=[4, 7, 10, 13, 16])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    reports = []
    print(f"{'n':>3} {'f':>3} {'behavior':18s} {'words':>8} {'decide p50':>10}")
    for n in args.n:
        for f in range(default_t(n) + 1):
            for beh in sorted(BEHAVIORS) if f else ["silent"]:
                rs = [run(RunConfig(n=n, f=f, behavior=beh, seed=s)) for s in range(args.seeds)]
                reports += rs
                words = sum(r.honest_words for r in rs) / len(rs)
                p50 = quantiles([r.decide_time_max for r in rs])["p50"]
                print(f"{n:>3} {f:>3} {beh:18s} {words:>8.1f} {p50:>10.0f}")
    print()
    for name in ("linear-cost", "adaptive-cost", "monotone-cost"):
        print(checks.CHECKS[name](reports).line())


if __name__ == "__main__":
    main()
