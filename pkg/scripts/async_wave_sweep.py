"""Fallback behavior in fully asynchronous runs: waves to decision, election
success and words per wave.

    python scripts/async_wave_sweep.py --adversary follow-protocol --seeds 60
"""

import argparse

import numpy as np

from optimistic_ba import checks
from optimistic_ba.experiment import Experiment, run_experiment
from optimistic_ba.metrics import mean_wave_words


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", nargs="+", type=int, default=[4, 7, 10, 13, 16])
    ap.add_argument("--adversary", default="follow-protocol")
    ap.add_argument("--seeds", type=int, default=60)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    exp = Experiment.from_dict({
        "n": args.n, "f": "t", "mode": "async", "adversary": args.adversary, "seeds": args.seeds,
    })
    reports = run_experiment(exp, jobs=args.jobs)
    print(f"{'n':>3} {'waves':>6} {'elected ok':>10} {'words/wave':>10}")
    for n in args.n:
        rs = [r for r in reports if r.n == n]
        ok = [x for r in rs for x in r.elected_completed]
        per_wave = [w for r in rs if (w := mean_wave_words(r)) is not None]
        print(f"{n:>3} {np.mean([r.waves_to_decision for r in rs]):>6.2f} "
              f"{np.mean(ok):>10.3f} {np.mean(per_wave):>10.1f}")
    print()
    for name in ("waves", "election", "wave-cost", "agreement"):
        print(checks.CHECKS[name](reports).line())


if __name__ == "__main__":
    main()
