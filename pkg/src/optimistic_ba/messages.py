"""Wire messages exchanged by parties.

Word costs follow one convention: a value is 1 word, a share or threshold
signature 1, a Key 2 (sq + signature), a Commit 3 (value + sq + signature),
an absent optional field is a 1-word marker, tags and sequence numbers are
free, and every message costs at least one word.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .crypto import SigShare, ThresholdSig
from .state import Commit, Key, Value


def _opt(field, size: int) -> int:
    return size if field is not None else 1


@dataclass(frozen=True, slots=True)
class Message:
    @property
    def words(self) -> int:
        return 1


# --- linear LBV ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class PreKeyStep(Message):
    sq: int
    leader: int
    value: Value
    key: Optional[Key]

    @property
    def words(self) -> int:
        return 1 + _opt(self.key, 2)


@dataclass(frozen=True, slots=True)
class KeyShare(Message):
    sq: int
    leader: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class KeyStep(Message):
    sq: int
    leader: int
    value: Value
    proof: ThresholdSig

    @property
    def words(self) -> int:
        return 2


@dataclass(frozen=True, slots=True)
class LockShare(Message):
    sq: int
    leader: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class LockStep(Message):
    sq: int
    leader: int
    value: Value
    proof: ThresholdSig

    @property
    def words(self) -> int:
        return 2


@dataclass(frozen=True, slots=True)
class CommitShare(Message):
    sq: int
    leader: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class CommitStep(Message):
    """The leader's final broadcast carrying the commit certificate."""

    sq: int
    leader: int
    value: Value
    proof: ThresholdSig

    @property
    def words(self) -> int:
        return 2


LBV_MESSAGES = (PreKeyStep, KeyShare, KeyStep, LockShare, LockStep, CommitShare, CommitStep)

# --- synchronous path key learning --------------------------------------------

@dataclass(frozen=True, slots=True)
class KeyRequest(Message):
    pass


@dataclass(frozen=True, slots=True)
class KeyReply(Message):
    key: Optional[Key]
    value: Optional[Value]

    @property
    def words(self) -> int:
        return _opt(self.key, 2) + _opt(self.value, 1)


# --- fallback waves -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class YourViewDone(Message):
    sq: int


@dataclass(frozen=True, slots=True)
class ShareReady(Message):
    sq: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class BarrierReady(Message):
    sq: int
    proof: ThresholdSig


@dataclass(frozen=True, slots=True)
class CoinShare(Message):
    sq: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class Exchange(Message):
    sq: int
    key: Optional[Key]
    value: Optional[Value]
    commit: Optional[Commit]

    @property
    def words(self) -> int:
        return _opt(self.key, 2) + _opt(self.value, 1) + _opt(self.commit, 3)


# --- help & try halting -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class HelpRequest(Message):
    sq: int
    share: SigShare


@dataclass(frozen=True, slots=True)
class HelpReply(Message):
    sq: int
    commit: Optional[Commit]

    @property
    def words(self) -> int:
        return _opt(self.commit, 3)


@dataclass(frozen=True, slots=True)
class Complain(Message):
    sq: int
    proof: ThresholdSig


def wire_name(msg: Message) -> str:
    return type(msg).__name__
