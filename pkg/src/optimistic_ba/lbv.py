"""Linear leader-based view (LBV): 3.5 leader<->all steps yielding key, lock
and commit proofs for one (sq, leader) pair."""

from __future__ import annotations

from typing import Callable, Optional

from .crypto import CryptoError, Signer
from .messages import (
    CommitShare,
    CommitStep,
    KeyShare,
    KeyStep,
    LockShare,
    LockStep,
    Message,
    PreKeyStep,
)
from .state import ExternalValidity, LocalState, Proof, Verifier

ALL = -1  # destination marker for a broadcast to every party, self included

# share message type -> (statement tag it signs, leader step it belongs to)
_SHARE_STEP = {
    KeyShare: ("preKeyStep", "collecting_key"),
    LockShare: ("keyStep", "collecting_lock"),
    CommitShare: ("lockStep", "collecting_commit"),
}


class LbvInstance:
    """One party's view of LBV (sq, leader).

    Handlers return a list of ``(destination, message)`` pairs; ``ALL`` means
    broadcast. Messages that arrive before :meth:`start_view` are held and
    replayed on start; after :meth:`wedge_view` everything is ignored.
    """

    def __init__(
        self,
        sq: int,
        leader: int,
        me: int,
        verifier: Verifier,
        signer: Signer,
        validity: ExternalValidity,
        trace: Optional[Callable[..., None]] = None,
    ):
        self.sq = sq
        self.leader = leader
        self.me = me
        self.verifier = verifier
        self.signer = signer
        self.validity = validity
        self.trace = trace
        self.S_key: dict = {}
        self.S_lock: dict = {}
        self.S_commit: dict = {}
        self.key_proof: Optional[Proof] = None
        self.lock_proof: Optional[Proof] = None
        self.commit_proof: Optional[Proof] = None
        self.active = True
        self.done = False
        self.reported = False  # your-view-done sent
        self.started = False
        self.leader_step = "idle"
        self.value = None  # leader's VALUE snapshot at start_view
        self._answered: set = set()
        self._pending: list = []

    @property
    def is_leader(self) -> bool:
        return self.me == self.leader

    def proofs(self):
        return self.key_proof, self.lock_proof, self.commit_proof

    # --- API ------------------------------------------------------------------

    def start_view(self, st: LocalState) -> list:
        if self.started or not self.active:
            return []
        self.started = True
        out = []
        if self.is_leader:
            out += self._lead(st)
        pending, self._pending = self._pending, []
        for sender, msg in pending:
            out += self.on_message(st, sender, msg)
        return out

    def _lead(self, st: LocalState) -> list:
        self.value = st.VALUE
        self.leader_step = "collecting_key"
        return [(ALL, PreKeyStep(self.sq, self.leader, st.VALUE, st.KEY))]

    def wedge_view(self):
        self.active = False
        self._pending = []
        return self.proofs()

    def on_message(self, st: LocalState, sender: int, msg: Message) -> list:
        if not self.active:
            return []
        if not self.started:
            self._pending.append((sender, msg))
            return []
        kind = type(msg)
        if kind in _SHARE_STEP:
            return self.on_share(sender, msg)
        if sender != self.leader:
            return []
        if kind is PreKeyStep:
            return self.on_first_step(st, msg)
        if kind is KeyStep or kind is LockStep:
            return self.on_step(msg)
        if kind is CommitStep:
            self.on_commit(msg)
        return []

    # --- follower side --------------------------------------------------------

    def on_first_step(self, st: LocalState, msg: PreKeyStep) -> list:
        if not self.active or "pre" in self._answered:
            return []
        key, value = msg.key, msg.value
        # key is up-to-date
        if st.LOCK is not None and (key is None or key.sq < st.LOCK):
            return []
        # key is valid
        if key is not None:
            key_leader = st.LEADERS.get(key.sq)
            if key_leader is None or not self.verifier.key_valid(key, key_leader, value):
                return []
        if not self.validity.is_valid(value):
            return []
        self._answered.add("pre")
        share = self.signer.share_sign(("preKeyStep", self.sq, self.leader, value))
        return [(self.leader, KeyShare(self.sq, self.leader, share))]

    def on_step(self, msg) -> list:
        if not self.active:
            return []
        if type(msg) is KeyStep:
            step, tag, next_tag, reply = "key", "preKeyStep", "keyStep", LockShare
        else:
            step, tag, next_tag, reply = "lock", "keyStep", "lockStep", CommitShare
        if step in self._answered:
            return []
        if not self.verifier.backend.threshold_validate(
            (tag, self.sq, self.leader, msg.value), msg.proof, self.verifier.quorum
        ):
            return []
        self._answered.add(step)
        proof = Proof(msg.value, msg.proof)
        if step == "key":
            self.key_proof = proof
        else:
            self.lock_proof = proof
        if self.trace:
            self.trace(step, self.sq, self.leader, msg.value)
        share = self.signer.share_sign((next_tag, self.sq, self.leader, msg.value))
        return [(self.leader, reply(self.sq, self.leader, share))]

    def on_commit(self, msg: CommitStep) -> bool:
        if not self.active or self.done:
            return self.done
        if not self.verifier.backend.threshold_validate(
            ("lockStep", self.sq, self.leader, msg.value), msg.proof, self.verifier.quorum
        ):
            return False
        self.commit_proof = Proof(msg.value, msg.proof)
        self.done = True
        if self.trace:
            self.trace("commit", self.sq, self.leader, msg.value)
        return True

    # --- leader side ----------------------------------------------------------

    def on_share(self, sender: int, msg) -> list:
        if not self.is_leader or not self.active:
            return []
        tag, step = _SHARE_STEP[type(msg)]
        if self.leader_step != step:
            return []
        shares = self._share_set(step)
        if sender in shares:
            return []
        if not self.verifier.backend.share_validate(
            (tag, self.sq, self.leader, self.value), sender, msg.share
        ):
            return []
        shares[sender] = msg.share
        if len(shares) < self.verifier.quorum:
            return []
        return self._advance(step, shares)

    def _share_set(self, step: str) -> dict:
        return {
            "collecting_key": self.S_key,
            "collecting_lock": self.S_lock,
            "collecting_commit": self.S_commit,
        }[step]

    def _advance(self, step: str, shares: dict) -> list:
        try:
            sig = self.verifier.backend.threshold_sign(shares.values(), self.verifier.quorum)
        except CryptoError:
            return []
        if step == "collecting_key":
            self.leader_step = "collecting_lock"
            return [(ALL, KeyStep(self.sq, self.leader, self.value, sig))]
        if step == "collecting_lock":
            self.leader_step = "collecting_commit"
            return [(ALL, LockStep(self.sq, self.leader, self.value, sig))]
        self.leader_step = "broadcast_done"
        if self.trace:
            self.trace("certificate", self.sq, self.leader, self.value)
        return [(ALL, CommitStep(self.sq, self.leader, self.value, sig))]
