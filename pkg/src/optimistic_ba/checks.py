"""Pass/fail verdicts over batches of run reports.

Each check takes the reports it is handed, ignores those outside its scope,
and returns a :class:`CheckResult`. Checks that need a sweep over n raise
:class:`InsufficientData` when the batch does not contain one.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .metrics import InsufficientData, RunReport, fit_model, mean_wave_words
from .sync_path import SlotSchedule

R2_MIN = 0.99
ELECTION_MIN = 0.33 - 0.05
WAVES_MAX = 3.0 + 0.5
GST_ITERATIONS = 2


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    value: Optional[float] = None

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _sync(reports):
    return [r for r in reports if r.mode == "synchronous"]


def _async(reports):
    return [r for r in reports if r.mode == "asynchronous"]


def _need(rs, what):
    if not rs:
        raise InsufficientData(f"no {what} runs in batch")
    return rs


def fallback_iteration(sq: int, n: int) -> int:
    """0-based fallback iteration a phase sequence number belongs to, -1 before it."""
    return -1 if sq <= n + 1 else (sq - n - 2) // 2


# --- per-run invariants ---------------------------------------------------------

def agreement(reports) -> CheckResult:
    rs = list(reports)
    bad = sum(1 for r in rs if not r.agreement_ok)
    invalid = sum(r.invalid_decisions for r in rs)
    return CheckResult(
        "agreement", bad == 0 and invalid == 0,
        f"{bad} disagreeing runs, {invalid} invalid decisions over {len(rs)} runs", bad + invalid,
    )


def causality(reports) -> CheckResult:
    rs = list(reports)
    c = sum(r.causality_violations for r in rs)
    s = sum(r.lbv_safety_violations for r in rs)
    return CheckResult(
        "causality", c == 0 and s == 0,
        f"{c} proof stores without t+1 honest predecessors, {s} conflicting commits over {len(rs)} runs",
        c + s,
    )


def quiescence(reports) -> CheckResult:
    rs = [r for r in reports if not r.capped]
    bad = sum(1 for r in rs if not (r.quiescent and r.all_decided))
    capped = sum(1 for r in reports if r.capped)
    return CheckResult(
        "quiescence", bad == 0,
        f"{bad} of {len(rs)} uncapped runs not quiescent with all decided ({capped} capped)", bad,
    )


def sync_timing(reports) -> CheckResult:
    """Every honest party decides by the end of the first honest-led slot;
    exactly at 7Δ when nobody is corrupted."""
    rs = _need(_sync(reports), "synchronous")
    bad = 0
    for r in rs:
        sched = SlotSchedule(r.n, r.delta)
        first_honest = next(j for j in range(1, r.n + 1) if j - 1 not in r.corrupted)
        times = list(r.decide_times.values())
        if any(v is None or v > sched.wedge_at(first_honest) for v in times):
            bad += 1
        elif r.f == 0 and any(v != sched.wedge_at(1) for v in times):
            bad += 1
    return CheckResult("sync-timing", bad == 0, f"{bad} of {len(rs)} synchronous runs late", bad)


def no_fallback(reports) -> CheckResult:
    rs = _need(_sync(reports), "synchronous")
    entered = sum(1 for r in rs if r.fallback_entered_any)
    complains = sum(r.complains_validated for r in rs)
    return CheckResult(
        "no-fallback", entered == 0 and complains == 0,
        f"{entered} runs entered the fallback, {complains} validated complaints", entered + complains,
    )


# --- scaling --------------------------------------------------------------------

def _group_mean(rs, value: Callable = lambda r: r.honest_words) -> dict:
    groups = defaultdict(list)
    for r in rs:
        v = value(r)
        if v is not None:
            groups[(r.n, r.f)].append(v)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def _distinct_n(keys, need=4):
    ns = sorted({n for n, _ in keys})
    if len(ns) < need:
        raise InsufficientData(f"need >= {need} distinct n, got {ns}")
    return ns


def linear_cost(reports) -> CheckResult:
    rs = [r for r in _sync(reports) if r.f == 0]
    means = _group_mean(rs)
    ns = _distinct_n(means)
    fit = fit_model(ns, [0] * len(ns), [means[(n, 0)] for n in ns], "linear")
    return CheckResult(
        "linear-cost", fit.r2 >= R2_MIN,
        f"f=0 honest words ~ {fit.coef[0]:.2f}*n + {fit.coef[1]:.2f}, R2={fit.r2:.4f}", fit.r2,
    )


def adaptive_cost(reports) -> CheckResult:
    rs = [r for r in _sync(reports) if r.f == r.t and r.f > 0 and r.behavior == "silent"]
    means = _group_mean(rs)
    keys = sorted(means)
    _distinct_n(keys)
    fit = fit_model([k[0] for k in keys], [k[1] for k in keys], [means[k] for k in keys], "fn+n")
    return CheckResult(
        "adaptive-cost", fit.r2 >= R2_MIN,
        f"f=t honest words ~ {fit.coef[0]:.2f}*f*n + {fit.coef[1]:.2f}*n, R2={fit.r2:.4f}", fit.r2,
    )


def monotone_cost(reports) -> CheckResult:
    """Worst-case (over byzantine behaviors in the batch) mean honest words is
    non-decreasing in f for every n."""
    rs = _need(_sync(reports), "synchronous")
    by_behavior = defaultdict(list)
    for r in rs:
        by_behavior[(r.n, r.f, r.behavior if r.f else "")].append(r.honest_words)
    worst: dict = {}
    for (n, f, _), ws in by_behavior.items():
        worst[(n, f)] = max(worst.get((n, f), 0.0), float(np.mean(ws)))
    drops = []
    for n in sorted({n for n, _ in worst}):
        series = [worst[(n, f)] for f in sorted(f for m, f in worst if m == n)]
        drops += [(n, a, b) for a, b in zip(series, series[1:]) if b < a]
    return CheckResult(
        "monotone-cost", not drops,
        f"{len(drops)} decreases in worst-case cost along f" + (f" e.g. {drops[0]}" if drops else ""),
        len(drops),
    )


def spam_cost(reports) -> CheckResult:
    """Extra honest words caused by one spam-help party, fitted to C*n + d; the
    increase must stay under C*n at every n."""
    base = _group_mean([r for r in _sync(reports) if r.f == 0])
    spam = _group_mean([r for r in _sync(reports) if r.f == 1 and r.behavior == "spam-help"])
    ns = _distinct_n([k for k in spam if (k[0], 0) in base])
    extra = [spam[(n, 1)] - base[(n, 0)] for n in ns]
    fit = fit_model(ns, [0] * len(ns), extra, "linear")
    c = fit.coef[0]
    bounded = all(e <= c * n + 1e-9 for n, e in zip(ns, extra))
    return CheckResult(
        "spam-cost", bounded and fit.r2 >= R2_MIN,
        f"extra words {[round(e, 1) for e in extra]} ~ {c:.2f}*n + {fit.coef[1]:.2f} (R2={fit.r2:.4f})",
        c,
    )


# --- fallback -------------------------------------------------------------------

def election(reports) -> CheckResult:
    waves = [ok for r in _async(reports) for ok in r.elected_completed]
    if not waves:
        raise InsufficientData("no asynchronous waves in batch")
    freq = float(np.mean(waves))
    return CheckResult(
        "election", freq >= ELECTION_MIN,
        f"completed LBV elected in {freq:.3f} of {len(waves)} waves (min {ELECTION_MIN:.2f})", freq,
    )


def waves(reports) -> CheckResult:
    rs = [r for r in _async(reports) if r.fallback_entered_any and r.all_decided]
    if not rs:
        raise InsufficientData("no asynchronous runs that reached the fallback")
    mean = float(np.mean([r.waves_to_decision for r in rs]))
    return CheckResult(
        "waves", mean <= WAVES_MAX, f"mean waves to decision {mean:.3f} over {len(rs)} runs (max {WAVES_MAX})", mean,
    )


def wave_cost(reports) -> CheckResult:
    means = _group_mean(_async(reports), mean_wave_words)
    by_n = defaultdict(list)
    for (n, _), v in means.items():
        by_n[n].append(v)
    ns = _distinct_n([(n, 0) for n in by_n])
    ys = [float(np.mean(by_n[n])) for n in ns]
    fit = fit_model(ns, [0] * len(ns), ys, "quadratic")
    return CheckResult(
        "wave-cost", fit.r2 >= R2_MIN, f"per-wave honest words ~ {fit.coef[0]:.2f}*n^2, R2={fit.r2:.4f}", fit.r2,
    )


def gst(reports) -> CheckResult:
    """Runs whose GST fell inside the fallback decide within two full
    iterations after the one in progress at GST."""
    rs = [
        r for r in reports
        if r.mode == "eventually_synchronous" and r.gst_phase
        and max(r.gst_phase.values()) >= r.n + 2
    ]
    if not rs:
        raise InsufficientData("no runs with GST inside the fallback")
    late = 0
    for r in rs:
        for p in r.honest_ids:
            if r.decide_times.get(p) is None:
                late += 1
                break
            lag = fallback_iteration(r.decide_phase[p], r.n) - fallback_iteration(r.gst_phase[p], r.n)
            if lag > GST_ITERATIONS:
                late += 1
                break
    return CheckResult(
        "gst", late == 0, f"{late} of {len(rs)} runs took more than {GST_ITERATIONS} iterations after GST", late,
    )


CHECKS = {
    "agreement": agreement,
    "causality": causality,
    "quiescence": quiescence,
    "sync-timing": sync_timing,
    "no-fallback": no_fallback,
    "linear-cost": linear_cost,
    "adaptive-cost": adaptive_cost,
    "monotone-cost": monotone_cost,
    "spam-cost": spam_cost,
    "election": election,
    "waves": waves,
    "wave-cost": wave_cost,
    "gst": gst,
}


def evaluate(reports: Iterable[RunReport], names: Iterable[str]) -> list:
    reports = list(reports)
    out = []
    for name in names:
        try:
            out.append(CHECKS[name](reports))
        except InsufficientData as e:
            out.append(CheckResult(name, False, f"insufficient data: {e}"))
    return out
