"""Parameter-grid experiments: expand a grid into run configs, execute them
(optionally in a process pool) and summarize the resulting reports."""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import checks as checks_mod
from .adversary import ADVERSARIES, BEHAVIORS, DELAY_POLICIES
from .metrics import InsufficientData, RunReport
from .simnet import MODE_ALIASES, MODES, ConfigError, RunConfig, run
from .sync_path import SlotSchedule

GST_NAMES = ("mid", "late", "fallback")
INVARIANT_CHECKS = ("agreement", "causality")


def default_t(n: int) -> int:
    return max(0, (n - 1) // 3)


def resolve_adversary(name: str, behavior: Optional[str] = None) -> tuple:
    """Adversary id -> (byzantine behavior, delay policy)."""
    if name in ADVERSARIES:
        beh, pol = ADVERSARIES[name]
    elif name in DELAY_POLICIES:
        beh, pol = "silent", name
    elif name in BEHAVIORS:
        beh, pol = name, "uniform"
    else:
        raise ConfigError(f"unknown adversary {name!r}")
    if behavior is not None:
        if behavior not in BEHAVIORS:
            raise ConfigError(f"unknown behavior {behavior!r}")
        beh = behavior
    return beh, pol


def gst_for(setting, cfg: RunConfig) -> int:
    """Turn a GST setting into ticks.

    ``mid`` lands halfway through the synchronous path, ``late`` well into the
    fallback, and ``fallback`` at a seeded point between the first honest
    fallback entry and the first honest decision of the same run played fully
    asynchronously (identical up to GST, so GST really falls mid-fallback).
    """
    if isinstance(setting, int):
        return setting
    end = SlotSchedule(cfg.n, cfg.delta).end
    if setting == "mid":
        return end // 2
    if setting == "late":
        return end + 60 * cfg.delta
    if setting == "fallback":
        probe = run(replace(cfg, mode="asynchronous", gst=None))
        entered = list(probe.fallback_times.values())
        decided = [v for v in probe.decide_times.values() if v is not None]
        if not entered or not decided:
            return end
        lo, hi = min(entered), min(decided)
        return random.Random(f"gst:{cfg.seed}").randint(lo, max(lo, hi - 1))
    raise ConfigError(f"bad gst {setting!r}")


@dataclass
class Experiment:
    n: list = field(default_factory=lambda: [4])
    f: list = field(default_factory=lambda: [0])  # ints or "t"
    t: Optional[int] = None
    mode: list = field(default_factory=lambda: ["synchronous"])
    adversary: list = field(default_factory=lambda: ["silent"])
    behavior: Optional[str] = None
    delta: list = field(default_factory=lambda: [10])
    gst: list = field(default_factory=lambda: ["fallback"])
    seeds: Union[int, list] = 10
    max_time: Optional[int] = None
    max_waves: int = 200
    out: Optional[str] = None
    checks: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "Experiment":
        known = cls.__dataclass_fields__
        extra = set(d) - set(known)
        if extra:
            raise ConfigError(f"unknown experiment keys {sorted(extra)}")
        kw = dict(d)
        for k in ("n", "f", "mode", "adversary", "delta", "gst", "checks"):
            if k in kw and not isinstance(kw[k], list):
                kw[k] = [kw[k]]
        exp = cls(**kw)
        exp.validate()
        return exp

    @property
    def seed_list(self) -> list:
        if isinstance(self.seeds, int):
            return list(range(self.seeds))
        return list(self.seeds)

    def validate(self) -> None:
        self.mode = [MODE_ALIASES.get(m, m) for m in self.mode]
        for m in self.mode:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}")
        for a in self.adversary:
            resolve_adversary(a, self.behavior)
        for g in self.gst:
            if not (isinstance(g, int) and g >= 0) and g not in GST_NAMES:
                raise ConfigError(f"gst must be a tick count or one of {GST_NAMES}, got {g!r}")
        for c in self.checks:
            if c not in checks_mod.CHECKS:
                raise ConfigError(f"unknown check {c!r}")
        if not self.seed_list:
            raise ConfigError("no seeds")
        for n in self.n:
            t = self.t if self.t is not None else default_t(n)
            for f in self.f:
                fv = t if f == "t" else f
                if not isinstance(fv, int):
                    raise ConfigError(f"bad f {f!r}")
                # raises ConfigError on n < 3t+1 or f > t
                RunConfig(n=n, t=t, f=fv)

    def tasks(self) -> list:
        """One (config kwargs, gst setting) task per grid point and seed, in
        deterministic (grid index, seed) order."""
        out = []
        for n in self.n:
            t = self.t if self.t is not None else default_t(n)
            for f in dict.fromkeys(t if f == "t" else f for f in self.f):
                for mode in self.mode:
                    gsts = self.gst if mode == "eventually_synchronous" else [None]
                    for g in gsts:
                        for adv in self.adversary:
                            beh, pol = resolve_adversary(adv, self.behavior)
                            for delta in self.delta:
                                for seed in self.seed_list:
                                    kw = dict(
                                        n=n, t=t, f=f, delta=delta, mode=mode, seed=seed,
                                        behavior=beh, delay_policy=pol, max_time=self.max_time,
                                        max_waves=self.max_waves,
                                    )
                                    out.append((kw, g))
        return out


def execute(task) -> RunReport:
    kw, g = task
    if kw["mode"] == "eventually_synchronous":
        kw = {**kw, "gst": gst_for(g, RunConfig(**{**kw, "mode": "asynchronous"}))}
    return run(RunConfig(**kw))


def run_experiment(exp: Experiment, jobs: int = 1) -> list:
    tasks = exp.tasks()
    if jobs <= 1:
        return [execute(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(execute, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def load_config(path: str) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    if not isinstance(d, dict):
        raise ConfigError("config file must hold one flat object")
    return d


# --- summaries ------------------------------------------------------------------

def quantiles(values) -> dict:
    if not values:
        return {}
    q = np.percentile(np.asarray(values, dtype=float), [50, 90, 99, 100])
    return dict(zip(("p50", "p90", "p99", "max"), (float(v) for v in q)))


def summarize(reports: list, check_names=()) -> dict:
    by_mode: dict = {}
    for r in reports:
        by_mode.setdefault(r.mode, []).append(r)
    summary = {
        "runs": len(reports),
        "agreement_violations": sum(1 for r in reports if not r.agreement_ok),
        "invalid_decisions": sum(r.invalid_decisions for r in reports),
        "causality_violations": sum(r.causality_violations + r.lbv_safety_violations for r in reports),
        "capped": sum(1 for r in reports if r.capped),
        "decide_time": {
            m: quantiles([r.decide_time_max for r in rs if r.decide_time_max is not None])
            for m, rs in sorted(by_mode.items())
        },
    }
    waves = [ok for r in reports for ok in r.elected_completed]
    if waves:
        summary["election_success"] = float(np.mean(waves))
        summary["election_waves"] = len(waves)
    fits = {}
    for name, verdict in (("linear-cost", "linear"), ("adaptive-cost", "f*n-dominated"), ("wave-cost", "quadratic")):
        try:
            res = checks_mod.CHECKS[name](reports)
            fits[name] = {"verdict": verdict if res.passed else "no fit", "detail": res.detail}
        except InsufficientData:
            pass
    summary["fits"] = fits
    results = checks_mod.evaluate(reports, check_names)
    summary["checks"] = {c.name: {"passed": c.passed, "detail": c.detail} for c in results}
    return summary


def invariant_violations(reports: list) -> int:
    return sum(0 if c.passed else 1 for c in checks_mod.evaluate(reports, INVARIANT_CHECKS))
