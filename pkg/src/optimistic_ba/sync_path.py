"""Adaptive synchronous path: n clock-scheduled LBV slots.

Slot j (1-based) is led by party j-1. Slot 1 runs from 0 to 7Δ. Every later
slot spans 9Δ: its leader asks everyone for keys at the slot start, starts
the view 2Δ later, and all parties wedge at the slot end. A leader that has
already decided skips its slot, which then costs nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .messages import KeyReply, KeyRequest
from .state import check_update_key
from .waits import At


@dataclass(frozen=True)
class SlotSchedule:
    n: int
    delta: int

    def slot_start(self, j: int) -> int:
        if j == 1:
            return 0
        return 7 * self.delta + (j - 2) * 9 * self.delta

    def leader_key_request_at(self, j: int) -> int:
        return self.slot_start(j)

    def leader_start_at(self, j: int) -> int:
        if j == 1:
            return 0
        return self.slot_start(j) + 2 * self.delta

    def wedge_at(self, j: int) -> int:
        return 7 * self.delta + (j - 1) * 9 * self.delta

    @staticmethod
    def leader_of(j: int) -> int:
        return j - 1

    @property
    def end(self) -> int:
        return self.wedge_at(self.n)


def run_sync_path(party):
    sched = party.schedule
    st = party.state
    for j in range(1, party.n + 1):
        leader = sched.leader_of(j)
        yield At(sched.slot_start(j))
        if j == 1 or leader != party.id:
            party.start_view(j, leader)
        elif st.COMMIT is None:
            party.broadcast(KeyRequest())
            yield At(sched.leader_start_at(j))
            party.start_view(j, leader)
        yield At(sched.wedge_at(j))
        party.wedge_and_update(j, leader)


def on_key_request(party, sender: int, msg: KeyRequest) -> None:
    # one reply per requester for the whole run, even once decided or halted
    if sender in party.key_requesters:
        return
    party.key_requesters.add(sender)
    st = party.state
    party.send(sender, KeyReply(st.KEY, st.VALUE))


def on_key_reply(party, sender: int, msg: KeyReply) -> None:
    if msg.key is not None and msg.value is not None:
        check_update_key(party.state, msg.key, msg.value, party.verifier)
