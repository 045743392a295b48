"""Per-party local state (LOCK, KEY, VALUE, COMMIT, LEADERS) and its updates."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .crypto import ThresholdBackend, ThresholdSig


@dataclass(frozen=True)
class Value:
    payload: str
    proof: str


class ExternalValidity:
    """Pluggable validity predicate; values carry a mock proof of membership.

    ``issue`` plays the role of whatever hands each party a valid input at
    the start of a run. Anything not issued here fails ``is_valid``.
    """

    def __init__(self, secret: str = "valid-domain"):
        self._key = hashlib.blake2b(secret.encode(), digest_size=32).digest()

    def _sigma(self, payload: str) -> str:
        return hashlib.blake2b(payload.encode(), key=self._key, digest_size=8).hexdigest()

    def issue(self, payload: str) -> Value:
        return Value(payload, self._sigma(payload))

    def is_valid(self, value) -> bool:
        return (
            isinstance(value, Value)
            and isinstance(value.payload, str)
            and value.proof == self._sigma(value.payload)
        )


@dataclass(frozen=True)
class Key:
    sq: int
    proof: ThresholdSig


@dataclass(frozen=True)
class Commit:
    val: Value
    sq: int
    proof: ThresholdSig


class Proof(NamedTuple):
    """(value, threshold signature) as stored by an LBV instance."""

    val: Value
    proof: ThresholdSig


class Verifier:
    """Threshold checks against the statements the LBV steps sign."""

    def __init__(self, backend: ThresholdBackend, n: int, t: int):
        self.backend = backend
        self.n = n
        self.t = t
        self.quorum = n - t

    def key_valid(self, key: Key, leader: int, value: Value) -> bool:
        return self.backend.threshold_validate(
            ("preKeyStep", key.sq, leader, value), key.proof, self.quorum
        )

    def commit_valid(self, commit: Commit, leader: int) -> bool:
        return self.backend.threshold_validate(
            ("lockStep", commit.sq, leader, commit.val), commit.proof, self.quorum
        )


@dataclass
class LocalState:
    LOCK: Optional[int] = None
    KEY: Optional[Key] = None
    VALUE: Optional[Value] = None
    COMMIT: Optional[Commit] = None
    LEADERS: dict = field(default_factory=dict)
    decided: bool = False
    # keys/commits whose LEADERS[sq] is not known yet (retrospective leaders)
    deferred: list = field(default_factory=list)

    @property
    def decision(self) -> Optional[Value]:
        return self.COMMIT.val if self.decided else None


def _decide(st: LocalState, commit: Commit) -> Optional[Value]:
    if st.COMMIT is None:
        st.COMMIT = commit
    if st.decided:
        return None
    st.decided = True
    return st.COMMIT.val


def update_state(
    st: LocalState,
    sq: int,
    leader: int,
    key_proof: Optional[Proof],
    lock_proof: Optional[Proof],
    commit_proof: Optional[Proof],
    verifier: Optional[Verifier] = None,
) -> Optional[Value]:
    """Fold the proofs returned by wedging LBV (sq, leader) into the state.

    Returns the decided value if this call produced the party's decision.
    Deferred keys/commits for ``sq`` are re-checked when a verifier is given.
    """
    st.LEADERS[sq] = leader
    if key_proof is not None:
        st.KEY = Key(sq, key_proof.proof)
        st.VALUE = key_proof.val
    if lock_proof is not None:
        st.LOCK = sq
    decision = None
    if commit_proof is not None:
        decision = _decide(st, Commit(commit_proof.val, sq, commit_proof.proof))
    if verifier is not None and st.deferred:
        decision = _retry_deferred(st, sq, verifier) or decision
    return decision


def _retry_deferred(st: LocalState, sq: int, verifier: Verifier) -> Optional[Value]:
    ready = [d for d in st.deferred if d[1].sq == sq]
    if not ready:
        return None
    st.deferred = [d for d in st.deferred if d[1].sq != sq]
    decision = None
    for kind, item, value in ready:
        if kind == "key":
            check_update_key(st, item, value, verifier)
        else:
            decision = check_update_commit(st, item, verifier) or decision
    return decision


def check_update_key(st: LocalState, key: Key, value: Value, verifier: Verifier) -> LocalState:
    if not isinstance(key, Key) or not isinstance(value, Value):
        return st
    if st.KEY is not None and key.sq <= st.KEY.sq:
        return st
    leader = st.LEADERS.get(key.sq)
    if leader is None:
        st.deferred.append(("key", key, value))
        return st
    if verifier.key_valid(key, leader, value):
        st.KEY = key
        st.VALUE = value
    return st


def check_update_commit(st: LocalState, commit: Commit, verifier: Verifier) -> Optional[Value]:
    """Adopt a commit certificate if none is held yet; returns the decision."""
    if st.COMMIT is not None or not isinstance(commit, Commit):
        return None
    leader = st.LEADERS.get(commit.sq)
    if leader is None:
        st.deferred.append(("commit", commit, None))
        return None
    if verifier.commit_valid(commit, leader):
        return _decide(st, commit)
    return None
