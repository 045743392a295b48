"""The optimistic agreement party: sync path, then help&tryHalting(n+1), then
the fallback from n+2, driven as a reactive state machine.

Inputs are events (start, message delivery, timer expiry); outputs are sends
and timer requests. The protocol body is a generator whose yields are the
blocking points of the pseudocode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

from . import fallback, halting, sync_path
from .crypto import LeaderCoin, ThresholdBackend
from .lbv import ALL, LbvInstance
from .messages import (
    LBV_MESSAGES,
    BarrierReady,
    CoinShare,
    Complain,
    Exchange,
    HelpReply,
    HelpRequest,
    KeyReply,
    KeyRequest,
    Message,
    ShareReady,
    YourViewDone,
)
from .state import ExternalValidity, LocalState, Value, Verifier, update_state
from .sync_path import SlotSchedule
from .waits import At, Until


class InvalidProposal(ValueError):
    pass


# --- events and outputs -------------------------------------------------------

class Start(NamedTuple):
    time: int


class Deliver(NamedTuple):
    time: int
    sender: int
    msg: Message


class Timer(NamedTuple):
    time: int


class Send(NamedTuple):
    dst: int
    msg: Message


class SetTimer(NamedTuple):
    time: int


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    t: int
    delta: int
    max_waves: int = 1000


_HANDLERS = {
    KeyRequest: sync_path.on_key_request,
    KeyReply: sync_path.on_key_reply,
    YourViewDone: fallback.on_view_done,
    ShareReady: fallback.on_share_ready,
    BarrierReady: fallback.on_barrier_ready,
    CoinShare: fallback.on_coin_share,
    Exchange: fallback.on_exchange,
    HelpRequest: halting.on_help_request,
    HelpReply: halting.on_help_reply,
    Complain: halting.on_complain,
}


class Party:
    honest = True

    def __init__(
        self,
        pid: int,
        params: ProtocolParams,
        backend: ThresholdBackend,
        validity: ExternalValidity,
        coin: LeaderCoin,
        observer: Any = None,
    ):
        self.id = pid
        self.params = params
        self.n = params.n
        self.t = params.t
        self.delta = params.delta
        self.max_waves = params.max_waves
        self.schedule = SlotSchedule(params.n, params.delta)
        self.signer = backend.signer(pid)
        self.verifier = Verifier(backend, params.n, params.t)
        self.validity = validity
        self.coin = coin
        self.obs = observer

        self.state = LocalState()
        self.lbvs: dict = {}
        self.gates: dict = {}
        self.waves: dict = {}
        self._exchange: dict = {}
        self.key_requesters: set = set()
        self.held_help_requests: list = []
        self.current_gate = 0

        self.phase = "idle"
        self.phase_sq = 0
        self.fallback_entered = False
        self.waves_run = 0
        self.capped = False
        self.decide_time: Optional[int] = None
        self.now = 0
        self._out: list = []
        self._proc = None
        self._wait = None

    # --- library API ----------------------------------------------------------

    def propose(self, v: Value) -> None:
        if not self.validity.is_valid(v):
            raise InvalidProposal(f"party {self.id}: proposal fails external validity")
        self.state.VALUE = v
        self.enter_phase("sync", 1)
        self._proc = self._program()
        self._wait = None

    def step(self, event) -> list:
        self.now = event.time
        self._out = []
        if type(event) is Deliver:
            self.on_message(event.sender, event.msg)
        self._resume()
        out, self._out = self._out, []
        return out

    def decision(self) -> Optional[Value]:
        return self.state.decision

    @property
    def halted(self) -> bool:
        """Blocked at a help&tryHalting gate that never released."""
        w = self._wait
        return isinstance(w, Until) and w.label.startswith("gate") and not w.cond()

    @property
    def waiting_on(self) -> str:
        w = self._wait
        if w is None:
            return "running" if self._proc is not None else "stopped"
        return w.label if isinstance(w, Until) else f"clock {w.time}"

    # --- program --------------------------------------------------------------

    def _program(self):
        yield from sync_path.run_sync_path(self)
        yield from halting.help_and_try_halting(self, self.n + 1)
        yield from fallback.run_fallback(self, self.n + 2)

    def _resume(self) -> None:
        while self._proc is not None:
            w = self._wait
            if w is not None:
                if type(w) is At:
                    if self.now < w.time:
                        return
                elif not w.cond():
                    return
            try:
                self._wait = next(self._proc)
            except StopIteration:
                self._proc = None
                self._wait = None
                return
            if type(self._wait) is At and self._wait.time > self.now:
                self._out.append(SetTimer(self._wait.time))

    # --- helpers used by the phase modules ------------------------------------

    def send(self, dst: int, msg: Message) -> None:
        self._out.append(Send(dst, msg))

    def broadcast(self, msg: Message) -> None:
        self._out.extend(Send(j, msg) for j in range(self.n))

    def _emit(self, sends) -> None:
        for dst, msg in sends:
            if dst == ALL:
                self.broadcast(msg)
            else:
                self.send(dst, msg)

    def _trace(self, kind, sq, leader, value) -> None:
        if self.obs is not None:
            self.obs.proof_stored(self.id, kind, sq, leader, value)

    def make_lbv(self, sq: int, leader: int) -> LbvInstance:
        return LbvInstance(sq, leader, self.id, self.verifier, self.signer, self.validity, self._trace)

    def lbv(self, sq: int, leader: int) -> LbvInstance:
        inst = self.lbvs.get((sq, leader))
        if inst is None:
            inst = self.lbvs[(sq, leader)] = self.make_lbv(sq, leader)
        return inst

    def start_view(self, sq: int, leader: int) -> None:
        inst = self.lbv(sq, leader)
        self._emit(inst.start_view(self.state))
        self._check_done(inst)

    def wedge_and_update(self, sq: int, leader: int) -> None:
        proofs = self.lbv(sq, leader).wedge_view()
        self.note_decision(update_state(self.state, sq, leader, *proofs, verifier=self.verifier))

    def _check_done(self, inst: LbvInstance) -> None:
        if inst.done and not inst.reported:
            inst.reported = True
            if self.is_wave(inst.sq):
                self.send(inst.leader, YourViewDone(inst.sq))

    def is_wave(self, sq: int) -> bool:
        return sq >= self.n + 2 and (sq - self.n) % 2 == 0

    def gate(self, sq: int):
        g = self.gates.get(sq)
        if g is None:
            g = self.gates[sq] = halting.HaltGate(sq)
        return g

    def reach_gate(self, sq: int) -> None:
        self.current_gate = max(self.current_gate, sq)
        held, self.held_help_requests = self.held_help_requests, []
        for sender, msg in held:
            halting.on_help_request(self, sender, msg)

    def wave(self, sq: int):
        w = self.waves.get(sq)
        if w is None:
            w = self.waves[sq] = fallback.WaveState(sq)
        return w

    def exchange_senders(self, sq: int) -> set:
        s = self._exchange.get(sq)
        if s is None:
            s = self._exchange[sq] = set()
        return s

    def enter_phase(self, phase: str, sq: int) -> None:
        self.phase = phase
        self.phase_sq = sq
        if self.obs is not None:
            self.obs.phase_entered(self.id, phase, sq, self.now)

    def wave_entered(self, sq: int) -> None:
        if self.obs is not None:
            self.obs.wave_entered(self.id, sq, self.now)

    def elected(self, sq: int, leader: int) -> None:
        if self.obs is not None:
            self.obs.elected(self.id, sq, leader, self.now)

    def note_decision(self, value: Optional[Value]) -> None:
        if value is None or self.decide_time is not None:
            return
        self.decide_time = self.now
        if self.obs is not None:
            self.obs.decided(self.id, value, self.now)

    # --- message dispatch -----------------------------------------------------

    def on_message(self, sender: int, msg: Message) -> None:
        kind = type(msg)
        if kind in LBV_MESSAGES:
            if not (0 <= msg.leader < self.n) or msg.sq < 1:
                return
            inst = self.lbv(msg.sq, msg.leader)
            self._emit(inst.on_message(self.state, sender, msg))
            self._check_done(inst)
            return
        handler = _HANDLERS.get(kind)
        if handler is not None:
            handler(self, sender, msg)


def create(params: ProtocolParams, pid: int, proposal: Value, backend, validity, coin, observer=None) -> Party:
    """Build a party and submit its proposal; drive it with :meth:`Party.step`."""
    p = Party(pid, params, backend, validity, coin, observer)
    p.propose(proposal)
    return p


def step(party: Party, event) -> list:
    return party.step(event)


def decision(party: Party) -> Optional[Value]:
    return party.decision()
