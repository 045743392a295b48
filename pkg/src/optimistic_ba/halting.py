"""help&tryHalting: undecided parties ask for help; t+1 signed requests form a
complaint that releases everyone into the next phase. A party that never sees
a valid complaint stays blocked at the gate, which is how honest parties halt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .crypto import CryptoError
from .messages import Complain, HelpReply, HelpRequest
from .state import check_update_commit
from .waits import Until


@dataclass
class HaltGate:
    sq: int
    S_help: dict = field(default_factory=dict)
    HALT: bool = True
    complained: bool = False  # complaint sent or echoed (at most once per sq)
    released: bool = False
    entered: bool = False


def help_and_try_halting(party, sq: int):
    gate = party.gate(sq)
    gate.entered = True
    party.enter_phase("gate", sq)
    party.reach_gate(sq)
    if party.state.COMMIT is None:
        share = party.signer.share_sign(("helpRequest", sq))
        party.broadcast(HelpRequest(sq, share))
    yield Until(lambda: not gate.HALT, f"gate {sq}")
    gate.released = True


def on_help_request(party, sender: int, msg: HelpRequest) -> None:
    # requests for gates this party has not reached are served on arrival there,
    # which bounds what a spamming requester can extract from a halted party
    if msg.sq > party.current_gate:
        party.held_help_requests.append((sender, msg))
        return
    gate = party.gate(msg.sq)
    if sender in gate.S_help:
        return
    if not party.verifier.backend.share_validate(("helpRequest", msg.sq), sender, msg.share):
        return
    gate.S_help[sender] = msg.share
    party.send(sender, HelpReply(msg.sq, party.state.COMMIT))
    if len(gate.S_help) == party.t + 1 and not gate.complained:
        try:
            sig = party.verifier.backend.threshold_sign(gate.S_help.values(), party.t + 1)
        except CryptoError:
            return
        gate.complained = True
        party.broadcast(Complain(msg.sq, sig))


def on_complain(party, sender: int, msg: Complain) -> None:
    if not party.verifier.backend.threshold_validate(
        ("helpRequest", msg.sq), msg.proof, party.t + 1
    ):
        return
    gate = party.gate(msg.sq)
    if not gate.complained:
        gate.complained = True
        party.broadcast(Complain(msg.sq, msg.proof))
    gate.HALT = False


def on_help_reply(party, sender: int, msg: HelpReply) -> None:
    if msg.commit is not None:
        party.note_decision(check_update_commit(party.state, msg.commit, party.verifier))
