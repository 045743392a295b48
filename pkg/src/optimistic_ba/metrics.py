"""Word-complexity accounting, run reports and scaling fits."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .messages import (
    LBV_MESSAGES,
    BarrierReady,
    CoinShare,
    Complain,
    HelpReply,
    HelpRequest,
    KeyReply,
    KeyRequest,
    Message,
    ShareReady,
    YourViewDone,
)

RECORD_FIELDS = (
    "seed", "mode", "n", "t", "f", "honest_words", "decide_time_max",
    "waves", "fallback_entered_any", "capped",
)

_GATE_MESSAGES = (HelpRequest, HelpReply, Complain)
_WAVE_MESSAGES = LBV_MESSAGES + (YourViewDone, ShareReady, BarrierReady, CoinShare)


class InsufficientData(ValueError):
    pass


def word_cost(msg: Message) -> int:
    return max(1, msg.words)


def phase_of(msg: Message, n: int) -> str:
    kind = type(msg)
    if kind in _GATE_MESSAGES:
        return "gate"
    if kind is KeyRequest or kind is KeyReply:
        return "sync"
    if kind in LBV_MESSAGES and msg.sq <= n:
        return "sync"
    return "fallback"


def wave_sq_of(msg: Message, n: int) -> Optional[int]:
    """The wave a message belongs to, if it is part of a wave's machinery."""
    if type(msg) not in _WAVE_MESSAGES:
        return None
    sq = msg.sq
    if sq >= n + 2 and (sq - n) % 2 == 0:
        return sq
    return None


@dataclass
class RunReport:
    seed: int
    mode: str
    n: int
    t: int
    f: int
    delta: int = 10
    corrupted: list = field(default_factory=list)
    behavior: str = ""
    delay_policy: str = ""
    gst: Optional[int] = None
    honest_words: int = 0
    honest_to_honest_words: int = 0
    words_by_message_type: dict = field(default_factory=dict)
    words_by_phase: dict = field(default_factory=lambda: {"sync": 0, "gate": 0, "fallback": 0})
    wave_words: dict = field(default_factory=dict)
    decide_times: dict = field(default_factory=dict)
    decisions: dict = field(default_factory=dict)
    invalid_decisions: int = 0
    decide_phase: dict = field(default_factory=dict)
    gst_phase: dict = field(default_factory=dict)
    waves: int = 0
    waves_to_decision: int = 0
    fallback_entered: dict = field(default_factory=dict)
    fallback_times: dict = field(default_factory=dict)
    elected_completed: list = field(default_factory=list)
    complains_validated: int = 0
    causality_violations: int = 0
    lbv_safety_violations: int = 0
    clamped_deliveries: int = 0
    capped: bool = False
    quiescent: bool = False
    halted: int = 0
    end_time: int = 0
    events: int = 0

    @property
    def honest_ids(self) -> list:
        return sorted(self.fallback_entered)

    @property
    def decide_time_max(self) -> Optional[int]:
        times = [v for v in self.decide_times.values() if v is not None]
        return max(times) if times else None

    @property
    def fallback_entered_any(self) -> bool:
        return any(self.fallback_entered.values())

    @property
    def all_decided(self) -> bool:
        return all(self.decide_times.get(p) is not None for p in self.fallback_entered)

    @property
    def agreement_ok(self) -> bool:
        return len(set(self.decisions.values())) <= 1

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["decide_time_max"] = self.decide_time_max
        rec["fallback_entered_any"] = self.fallback_entered_any
        rec["all_decided"] = self.all_decided
        rec["agreement_ok"] = self.agreement_ok
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_record(cls, rec: dict) -> "RunReport":
        names = cls.__dataclass_fields__
        kw = {k: v for k, v in rec.items() if k in names}
        r = cls(**kw)
        # json turns int keys into strings
        for name in ("decide_times", "decisions", "decide_phase", "gst_phase", "fallback_entered", "fallback_times"):
            setattr(r, name, {int(k): v for k, v in getattr(r, name).items()})
        r.wave_words = {int(k): v for k, v in r.wave_words.items()}
        return r


def write_jsonl(reports: Iterable[RunReport], fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")


def read_jsonl(fh) -> list:
    return [RunReport.from_record(json.loads(line)) for line in fh if line.strip()]


def to_table(reports: Iterable[RunReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in reports:
        rec = r.to_record()
        w.writerow([rec[k] for k in RECORD_FIELDS])
    return buf.getvalue()


# --- fits -----------------------------------------------------------------------

@dataclass
class Fit:
    model: str
    coef: tuple
    r2: float
    residuals: tuple

    def predict(self, features: np.ndarray) -> np.ndarray:
        return features @ np.asarray(self.coef)


def r_squared(y: np.ndarray, yhat: np.ndarray) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


MODELS = {
    # name -> feature columns as functions of (n, f)
    "adaptive": lambda n, f: [(f + 1) * n, np.ones_like(n)],
    "linear": lambda n, f: [n, np.ones_like(n)],
    "fn+n": lambda n, f: [f * n, n],
    "quadratic": lambda n, f: [n * n],
}


def fit_model(n: Sequence, f: Sequence, y: Sequence, model: str) -> Fit:
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.column_stack(MODELS[model](n, f))
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    yhat = X @ coef
    return Fit(model, tuple(float(c) for c in coef), r_squared(y, yhat), tuple(float(v) for v in y - yhat))


def fit_complexity(reports: Iterable[RunReport], model: str = "adaptive", value=None) -> Fit:
    """Least-squares fit of mean honest words per (n, f) group.

    ``value`` picks the measured quantity from a report (default honest_words).
    Needs at least four distinct n.
    """
    value = value or (lambda r: r.honest_words)
    groups: dict = {}
    for r in reports:
        v = value(r)
        if v is not None:
            groups.setdefault((r.n, r.f), []).append(v)
    if len({n for n, _ in groups}) < 4:
        raise InsufficientData(f"need >= 4 distinct n, got {sorted({n for n, _ in groups})}")
    keys = sorted(groups)
    ns = [k[0] for k in keys]
    fs = [k[1] for k in keys]
    ys = [float(np.mean(groups[k])) for k in keys]
    return fit_model(ns, fs, ys, model)


def mean_wave_words(r: RunReport) -> Optional[float]:
    if not r.wave_words:
        return None
    return float(np.mean(list(r.wave_words.values())))
