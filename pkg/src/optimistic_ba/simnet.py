"""Deterministic discrete-event simulator.

One global integer clock. Events are ordered by (time, priority, sequence id)
where deliveries run before timer expiries at the same tick, so a message that
arrives exactly at a deadline still counts. Everything random is drawn from
generators seeded by the run seed, so a report is a pure function of its
config.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .adversary import BEHAVIORS, DELAY_POLICIES, DelayWindow, make_byzantine, make_delay_policy
from .crypto import LeaderCoin, MockThresholdScheme
from .metrics import RunReport, phase_of, wave_sq_of
from .party import Deliver, Party, ProtocolParams, Send, Start, Timer
from .state import ExternalValidity

MODES = ("synchronous", "eventually_synchronous", "asynchronous")
MODE_ALIASES = {"sync": "synchronous", "es": "eventually_synchronous", "async": "asynchronous"}

_DELIVER, _TIMER, _START = 0, 1, 2


class ConfigError(ValueError):
    pass


class CapExceeded(RuntimeError):
    def __init__(self, report: RunReport):
        super().__init__(f"run capped at t={report.end_time} (seed {report.seed})")
        self.report = report


@dataclass(frozen=True)
class RunConfig:
    n: int = 4
    t: Optional[int] = None  # defaults to the largest t with n >= 3t+1
    f: int = 0
    delta: int = 10
    mode: str = "synchronous"
    gst: Optional[int] = None  # only read in eventually_synchronous mode
    seed: int = 0
    corrupted: Optional[tuple] = None  # defaults to the first f parties
    behavior: str = "silent"
    delay_policy: str = "uniform"
    max_time: Optional[int] = None
    max_waves: int = 200
    async_max_delay: Optional[int] = None  # pre-GST delays are drawn up to this; default 5Δ
    crash_time: Optional[int] = None

    def __post_init__(self):
        mode = MODE_ALIASES.get(self.mode, self.mode)
        object.__setattr__(self, "mode", mode)
        if self.t is None:
            object.__setattr__(self, "t", max(0, (self.n - 1) // 3))
        if self.corrupted is None:
            object.__setattr__(self, "corrupted", tuple(range(self.f)))
        else:
            object.__setattr__(self, "corrupted", tuple(sorted(self.corrupted)))
        self.validate()

    def validate(self) -> None:
        n, t, f = self.n, self.t, self.f
        if n < 1 or t < 0:
            raise ConfigError(f"bad sizes n={n} t={t}")
        if n < 3 * t + 1:
            raise ConfigError(f"need n >= 3t+1, got n={n} t={t}")
        if not 0 <= f <= t:
            raise ConfigError(f"need 0 <= f <= t, got f={f} t={t}")
        if len(set(self.corrupted)) != f or any(not 0 <= i < n for i in self.corrupted):
            raise ConfigError(f"corrupted set {self.corrupted} must hold f={f} distinct party ids")
        if self.delta < 1:
            raise ConfigError("delta must be a positive number of ticks")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "eventually_synchronous" and (self.gst is None or self.gst < 0):
            raise ConfigError("eventually_synchronous needs gst >= 0")
        if self.behavior not in BEHAVIORS:
            raise ConfigError(f"unknown behavior {self.behavior!r}")
        if self.delay_policy not in DELAY_POLICIES:
            raise ConfigError(f"unknown delay policy {self.delay_policy!r}")
        if self.max_waves < 1:
            raise ConfigError("max_waves must be >= 1")

    @property
    def effective_gst(self) -> Optional[int]:
        if self.mode == "synchronous":
            return 0
        if self.mode == "asynchronous":
            return None
        return self.gst

    @property
    def time_cap(self) -> int:
        return self.max_time if self.max_time is not None else 10_000 * self.delta

    @property
    def async_max(self) -> int:
        return self.async_max_delay if self.async_max_delay is not None else 5 * self.delta

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


def _rng(seed: int, stream: str) -> random.Random:
    return random.Random(f"{seed}:{stream}")


@dataclass
class _InstanceTrace:
    key: dict = field(default_factory=dict)   # value -> honest keyProof stores
    lock: dict = field(default_factory=dict)
    commit_values: set = field(default_factory=set)


class Simulation:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        n, t = cfg.n, cfg.t
        self.params = ProtocolParams(n, t, cfg.delta, cfg.max_waves)
        self.backend = MockThresholdScheme(n, secret=f"dealer-{cfg.seed}")
        self.validity = ExternalValidity(f"domain-{cfg.seed}")
        self.coin = LeaderCoin(self.backend, n, t, cfg.seed)
        self.gst = cfg.effective_gst
        self.net_rng = _rng(cfg.seed, "net")
        corrupted = set(cfg.corrupted)
        self.honest_ids = [i for i in range(n) if i not in corrupted]
        self.is_honest = [i not in corrupted for i in range(n)]
        self.policy = make_delay_policy(cfg.delay_policy)
        self.policy.setup(n, self.honest_ids, _rng(cfg.seed, "policy"))

        self.report = RunReport(
            seed=cfg.seed, mode=cfg.mode, n=n, t=t, f=cfg.f, delta=cfg.delta,
            corrupted=list(cfg.corrupted), behavior=cfg.behavior,
            delay_policy=cfg.delay_policy, gst=self.gst,
        )
        self.report.decide_times = {i: None for i in self.honest_ids}
        self.report.fallback_entered = {i: False for i in self.honest_ids}
        self._phases: dict = {i: [] for i in self.honest_ids}
        self._instances: dict = {}
        self._elected_seen: set = set()

        self.parties: list = []
        for i in range(n):
            args = (i, self.params, self.backend, self.validity, self.coin, self)
            if self.is_honest[i]:
                p = Party(*args)
            else:
                kw = {"rng": _rng(cfg.seed, f"byz{i}")}
                if cfg.behavior == "crash-at":
                    kw["crash_time"] = cfg.crash_time
                p = make_byzantine(cfg.behavior, *args, **kw)
            p.propose(self.validity.issue(f"s{cfg.seed}-p{i}"))
            self.parties.append(p)

        self._heap: list = []
        self._seq = 0
        self._started = False
        self._events = 0
        self._capped = False
        self.now = 0

    # --- observer hooks (called by parties) -----------------------------------

    def proof_stored(self, pid, kind, sq, leader, value) -> None:
        if not self.is_honest[pid]:
            return
        tr = self._instances.get((sq, leader))
        if tr is None:
            tr = self._instances[(sq, leader)] = _InstanceTrace()
        t1 = self.cfg.t + 1
        if kind == "key":
            tr.key[value] = tr.key.get(value, 0) + 1
        elif kind == "lock":
            if tr.key.get(value, 0) < t1:
                self.report.causality_violations += 1
            tr.lock[value] = tr.lock.get(value, 0) + 1
        else:  # commit store or commit certificate formed at the leader
            if tr.lock.get(value, 0) < t1:
                self.report.causality_violations += 1
            tr.commit_values.add(value)
            if len(tr.commit_values) > 1:
                self.report.lbv_safety_violations += 1

    def phase_entered(self, pid, phase, sq, now) -> None:
        if self.is_honest[pid]:
            self._phases[pid].append((now, sq))
            if phase == "fallback" and not self.report.fallback_entered[pid]:
                self.report.fallback_entered[pid] = True
                self.report.fallback_times[pid] = now

    def wave_entered(self, pid, sq, now) -> None:
        pass

    def elected(self, pid, sq, leader, now) -> None:
        if not self.is_honest[pid] or sq in self._elected_seen:
            return
        self._elected_seen.add(sq)
        holders = sum(
            1 for i in self.honest_ids
            if (inst := self.parties[i].lbvs.get((sq, leader))) is not None and inst.commit_proof is not None
        )
        self.report.elected_completed.append(holders >= self.cfg.t + 1)

    def decided(self, pid, value, now) -> None:
        if not self.is_honest[pid]:
            return
        r = self.report
        r.decide_times[pid] = now
        r.decisions[pid] = value.payload
        if not self.validity.is_valid(value):
            r.invalid_decisions += 1
        p = self.parties[pid]
        r.decide_phase[pid] = p.phase_sq
        r.waves_to_decision = max(r.waves_to_decision, p.waves_run)

    # --- event loop -----------------------------------------------------------

    def _push(self, time, prio, kind, dst, src, msg) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, prio, self._seq, kind, dst, src, msg))

    def _send(self, src: int, dst: int, msg) -> None:
        now = self.now
        if src == dst:
            self._push(now, 0, _DELIVER, dst, src, msg)
            return
        if self.is_honest[src]:
            r = self.report
            w = msg.words
            if w < 1:
                w = 1
            r.honest_words += w
            if self.is_honest[dst]:
                r.honest_to_honest_words += w
            name = type(msg).__name__
            r.words_by_message_type[name] = r.words_by_message_type.get(name, 0) + w
            r.words_by_phase[phase_of(msg, self.cfg.n)] += w
            wsq = wave_sq_of(msg, self.cfg.n)
            if wsq is not None:
                r.wave_words[wsq] = r.wave_words.get(wsq, 0) + w
        self._push(self.schedule_delivery(src, dst, msg, now), 0, _DELIVER, dst, src, msg)

    def schedule_delivery(self, src: int, dst: int, msg, send_time: int) -> int:
        gst = self.gst
        latest = None if gst is None else max(send_time, gst) + self.cfg.delta
        window = DelayWindow(latest, gst is not None and send_time >= gst, self.cfg.delta, self.cfg.async_max)
        at = self.policy(msg, src, dst, send_time, window, self.net_rng)
        if at <= send_time:
            at = send_time + 1
            self.report.clamped_deliveries += 1
        elif latest is not None and at > latest:
            at = latest
            self.report.clamped_deliveries += 1
        return at

    def advance(self, until: Optional[int] = None) -> bool:
        """Process events up to and including tick ``until`` (default: the
        time cap). Returns False once the run can make no further progress."""
        cfg = self.cfg
        cap = cfg.time_cap
        stop = cap if until is None else min(until, cap)
        if not self._started:
            self._started = True
            for i in range(cfg.n):
                self._push(0, 0, _START, i, i, None)
        heap = self._heap
        pop = heapq.heappop
        parties = self.parties
        events = 0
        while heap and heap[0][0] <= stop:
            time, _, _, kind, dst, src, msg = pop(heap)
            self.now = time
            events += 1
            if kind == _DELIVER:
                ev = Deliver(time, src, msg)
            elif kind == _TIMER:
                ev = Timer(time)
            else:
                ev = Start(time)
            for out in parties[dst].step(ev):
                if type(out) is Send:
                    self._send(dst, out.dst, out.msg)
                elif out.time > time:
                    self._push(out.time, 1, _TIMER, dst, dst, None)
        self._events += events
        if heap and heap[0][0] > cap:
            self._capped = True
        return bool(heap) and not self._capped

    def run(self) -> RunReport:
        self.advance()
        return self._finish(self._events, self._capped)

    def _finish(self, events: int, capped: bool) -> RunReport:
        r = self.report
        r.events = events
        r.end_time = self.now
        honest = [self.parties[i] for i in self.honest_ids]
        r.capped = capped or any(p.capped for p in honest)
        r.quiescent = not self._heap
        r.waves = max((p.waves_run for p in honest), default=0)
        r.halted = sum(1 for p in honest if p.halted)
        r.complains_validated = sum(
            1 for p in honest for g in p.gates.values() if not g.HALT
        )
        if self.gst is not None and self.cfg.mode == "eventually_synchronous":
            for i in self.honest_ids:
                before = [sq for at, sq in self._phases[i] if at <= self.gst]
                r.gst_phase[i] = before[-1] if before else 0
        return r


def run(cfg: RunConfig, raise_on_cap: bool = False) -> RunReport:
    report = Simulation(cfg).run()
    if raise_on_cap and report.capped:
        raise CapExceeded(report)
    return report
