"""Asynchronous fallback: waves of n concurrent LBVs, a barrier, a common-coin
election of one of them in retrospect, state exchange, and a deterministic
round-robin LBV tried between waves.

Sequence numbers: the fallback starts at n+2. Each iteration uses ``sq`` for
the wave and ``sq+1`` for the round-robin slot, then advances by two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .crypto import CryptoError
from .halting import help_and_try_halting
from .messages import BarrierReady, CoinShare, Exchange, ShareReady, YourViewDone
from .state import check_update_commit, check_update_key, update_state
from .waits import At, Until

RR_TIMEOUT_DELTAS = 8


@dataclass
class WaveState:
    sq: int
    done_from: set = field(default_factory=set)  # your-view-done senders (as leader)
    barrier_invoked: bool = False
    S_barrier: dict = field(default_factory=dict)
    barrier_sent: bool = False
    echoed: bool = False
    READY: bool = False
    S_coin: dict = field(default_factory=dict)
    leader: Optional[int] = None


def run_fallback(party, sq_init: int):
    party.fallback_entered = True
    party.enter_phase("fallback", sq_init)
    rr_leader = 0
    # bring every leader of the first wave up to the freshest key from the sync path
    yield from exchange_state(party, sq_init - 1)
    sq = sq_init
    while True:
        if party.waves_run >= party.max_waves:
            party.capped = True
            return
        yield from run_wave(party, sq)
        yield from exchange_state(party, sq)
        yield from help_and_try_halting(party, sq)
        party.enter_phase("fallback", sq + 1)
        yield from try_synchrony(party, sq + 1, rr_leader, RR_TIMEOUT_DELTAS * party.delta)
        yield from exchange_state(party, sq + 1)
        yield from help_and_try_halting(party, sq + 1)
        party.enter_phase("fallback", sq + 2)
        rr_leader = (rr_leader + 1) % party.n
        sq += 2


def try_synchrony(party, sq: int, leader: int, timeout: int):
    party.start_view(sq, leader)
    yield At(party.now + timeout)
    party.wedge_and_update(sq, leader)


def run_wave(party, sq: int):
    party.waves_run += 1
    party.wave_entered(sq)
    wave = party.wave(sq)
    for j in range(party.n):
        party.start_view(sq, j)
    yield Until(lambda: wave.READY, f"barrier {sq}")
    party.broadcast(CoinShare(sq, party.signer.share_sign(("coin", sq))))
    yield Until(lambda: len(wave.S_coin) >= party.t + 1, f"coin {sq}")
    coin = party.verifier.backend.threshold_sign(wave.S_coin.values(), party.t + 1)
    wave.leader = leader = party.coin.leader(sq, coin)
    party.elected(sq, leader)
    proofs = {j: party.lbv(sq, j).wedge_view() for j in range(party.n)}
    decision = update_state(party.state, sq, leader, *proofs[leader], verifier=party.verifier)
    party.note_decision(decision)


def exchange_state(party, sq: int):
    st = party.state
    party.broadcast(Exchange(sq, st.KEY, st.VALUE, st.COMMIT))
    senders = party.exchange_senders(sq)
    yield Until(lambda: len(senders) >= party.n - party.t, f"exchange {sq}")


def on_exchange(party, sender: int, msg: Exchange) -> None:
    senders = party.exchange_senders(msg.sq)
    if sender in senders:
        return
    senders.add(sender)
    st = party.state
    if msg.key is not None and msg.value is not None:
        check_update_key(st, msg.key, msg.value, party.verifier)
    if msg.commit is not None:
        party.note_decision(check_update_commit(st, msg.commit, party.verifier))


def on_view_done(party, sender: int, msg: YourViewDone) -> None:
    if not party.is_wave(msg.sq):
        return
    wave = party.wave(msg.sq)
    if sender in wave.done_from:
        return
    wave.done_from.add(sender)
    if len(wave.done_from) >= party.n - party.t and not wave.barrier_invoked:
        wave.barrier_invoked = True
        share = party.signer.share_sign(("shareReady", msg.sq))
        party.broadcast(ShareReady(msg.sq, share))


def on_share_ready(party, sender: int, msg: ShareReady) -> None:
    if not party.is_wave(msg.sq):
        return
    wave = party.wave(msg.sq)
    if sender in wave.S_barrier:
        return
    if not party.verifier.backend.share_validate(("shareReady", msg.sq), sender, msg.share):
        return
    wave.S_barrier[sender] = msg.share
    if len(wave.S_barrier) >= party.n - party.t and not wave.barrier_sent:
        try:
            sig = party.verifier.backend.threshold_sign(wave.S_barrier.values(), party.n - party.t)
        except CryptoError:
            return
        wave.barrier_sent = True
        party.broadcast(BarrierReady(msg.sq, sig))


def on_barrier_ready(party, sender: int, msg: BarrierReady) -> None:
    if not party.is_wave(msg.sq):
        return
    if not party.verifier.backend.threshold_validate(
        ("shareReady", msg.sq), msg.proof, party.n - party.t
    ):
        return
    wave = party.wave(msg.sq)
    if not wave.echoed:
        wave.echoed = True
        party.broadcast(BarrierReady(msg.sq, msg.proof))
    wave.READY = True


def on_coin_share(party, sender: int, msg: CoinShare) -> None:
    if not party.is_wave(msg.sq):
        return
    wave = party.wave(msg.sq)
    if sender in wave.S_coin:
        return
    if party.verifier.backend.share_validate(("coin", msg.sq), sender, msg.share):
        wave.S_coin[sender] = msg.share
