"""Adversary plugins: message-delay policies and byzantine party behaviors.

Both kinds are registered by string id so the harness can select them by
name. Delay policies choose a delivery time inside the legal window handed
to them; the simulator clamps anything outside it. Byzantine behaviors are
party subclasses driven through the same ``step`` interface as honest
parties, so they can only sign with their own keys.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .lbv import LbvInstance
from .messages import CommitStep, HelpRequest, KeyRequest, PreKeyStep
from .party import Party, Start


# --- delay policies -------------------------------------------------------------

@dataclass(frozen=True)
class DelayWindow:
    """Legal delivery window for one message: (send_time, latest]."""

    latest: Optional[int]  # None when the network never stabilizes
    synchronous: bool  # sent at or after GST
    delta: int
    async_max: int


class DelayPolicy:
    name = ""

    def setup(self, n: int, honest: list, rng: random.Random) -> None:
        pass

    def delay(self, src: int, dst: int, msg, window: DelayWindow, rng: random.Random) -> int:
        raise NotImplementedError

    def __call__(self, msg, src: int, dst: int, send_time: int, window: DelayWindow, rng) -> int:
        return send_time + self.delay(src, dst, msg, window, rng)


class UniformDelay(DelayPolicy):
    name = "uniform"

    def delay(self, src, dst, msg, window, rng):
        return rng.randint(1, window.delta if window.synchronous else window.async_max)


class MaxDelay(DelayPolicy):
    """Every message takes as long as the adversary is allowed."""

    name = "max"

    def delay(self, src, dst, msg, window, rng):
        return window.delta if window.synchronous else window.async_max


class FixedDelay(DelayPolicy):
    name = "fixed"

    def delay(self, src, dst, msg, window, rng):
        return window.delta


class StarveLeader(DelayPolicy):
    """Slow down everything to or from one honest party so that the views it
    leads tend to finish after the barrier, i.e. after the election."""

    name = "starve-leader"

    def __init__(self, lo_deltas: int = 6, hi_deltas: int = 12):
        self.lo = lo_deltas
        self.hi = hi_deltas
        self.target: Optional[int] = None

    def setup(self, n, honest, rng):
        self.target = rng.choice(honest) if honest else None

    def delay(self, src, dst, msg, window, rng):
        if window.synchronous:
            return window.delta if self.target in (src, dst) else rng.randint(1, window.delta)
        if self.target in (src, dst):
            return rng.randint(self.lo * window.delta, self.hi * window.delta)
        return rng.randint(1, window.async_max)


DELAY_POLICIES = {
    cls.name: cls for cls in (UniformDelay, MaxDelay, FixedDelay, StarveLeader)
}


def make_delay_policy(name: str) -> DelayPolicy:
    return DELAY_POLICIES[name]()


# --- byzantine behaviors --------------------------------------------------------

class FollowProtocol(Party):
    """Corrupted but indistinguishable from honest."""

    honest = False

    def __init__(self, *args, rng: Optional[random.Random] = None, **kw):
        super().__init__(*args, **kw)
        self.rng = rng or random.Random(0)


class Silent(FollowProtocol):
    def propose(self, v) -> None:
        pass

    def step(self, event) -> list:
        return []


class CrashAt(FollowProtocol):
    """Follows the protocol until a seeded crash time inside the sync path."""

    def __init__(self, *args, crash_time: Optional[int] = None, **kw):
        super().__init__(*args, **kw)
        if crash_time is None:
            crash_time = self.rng.randint(0, self.schedule.end)
        self.crash_time = crash_time

    def step(self, event) -> list:
        if event.time >= self.crash_time:
            return []
        return super().step(event)


class EquivocatingLbv(LbvInstance):
    """Leader side that proposes two values to the two halves of the parties,
    pushes whichever gathers a quorum, and shows the commit to half only."""

    def _lead(self, st):
        n = self.verifier.n
        a = st.VALUE
        b = self.validity.issue(f"equivocation-{self.me}-{self.sq}")
        self.candidates = {a: {}, b: {}}
        for v, shares in self.candidates.items():
            shares[self.me] = self.signer.share_sign(("preKeyStep", self.sq, self.leader, v))
        self.leader_step = "collecting_key"
        out = []
        for j in range(n):
            if j % 2 == 0:
                out.append((j, PreKeyStep(self.sq, self.leader, a, st.KEY)))
            else:
                out.append((j, PreKeyStep(self.sq, self.leader, b, None)))
        return out

    def on_share(self, sender, msg):
        if not self.is_leader or self.leader_step != "collecting_key" or not self.active:
            return super().on_share(sender, msg)
        for v, shares in self.candidates.items():
            if sender in shares:
                continue
            stmt = ("preKeyStep", self.sq, self.leader, v)
            if self.verifier.backend.share_validate(stmt, sender, msg.share):
                shares[sender] = msg.share
                if len(shares) >= self.verifier.quorum:
                    self.value = v
                    self.S_key = shares
                    return self._advance("collecting_key", shares)
        return []

    def _advance(self, step, shares):
        out = super()._advance(step, shares)
        if out and type(out[0][1]) is CommitStep:
            msg = out[0][1]
            return [(j, msg) for j in range(0, self.verifier.n, 2)]
        return out


class EquivocateLeader(FollowProtocol):
    def make_lbv(self, sq, leader):
        if leader != self.id:
            return super().make_lbv(sq, leader)
        return EquivocatingLbv(sq, leader, self.id, self.verifier, self.signer, self.validity, None)


class SpamHelp(FollowProtocol):
    """Follows the protocol and also floods key and help requests."""

    repeats = 3
    gates_ahead = 4

    def step(self, event) -> list:
        out = super().step(event)
        if type(event) is Start:
            self._out = []
            for _ in range(self.repeats):
                self.broadcast(KeyRequest())
                for sq in range(self.n + 1, self.n + 1 + self.gates_ahead):
                    self.broadcast(HelpRequest(sq, self.signer.share_sign(("helpRequest", sq))))
            out = out + self._out
            self._out = []
        return out


BEHAVIORS = {
    "silent": Silent,
    "crash-at": CrashAt,
    "equivocate-leader": EquivocateLeader,
    "spam-help": SpamHelp,
    "follow-protocol": FollowProtocol,
}

# adversaries named in experiment grids: (byzantine behavior, delay policy)
ADVERSARIES = {
    "silent": ("silent", "uniform"),
    "crash-at": ("crash-at", "uniform"),
    "equivocate-leader": ("equivocate-leader", "uniform"),
    "spam-help": ("spam-help", "uniform"),
    "starve-leader": ("follow-protocol", "starve-leader"),
    "follow-protocol": ("follow-protocol", "uniform"),
}


def make_byzantine(name: str, *args, **kw) -> Party:
    return BEHAVIORS[name](*args, **kw)

