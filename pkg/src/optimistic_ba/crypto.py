"""Mock threshold signatures and the common coin.

Cryptography is treated as perfect: a share is a keyed digest produced with
the signer's private key, and a threshold signature is a dealer-authenticated
record of which distinct signers contributed. Nothing here is secure against a
real attacker; it is unforgeable only against code that never touches the
dealer's keys, which is how the simulator hands keys to byzantine plugins.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Protocol


class CryptoError(Exception):
    pass


class InsufficientShares(CryptoError):
    pass


class MixedPayload(CryptoError):
    pass


class InvalidShare(CryptoError):
    pass


@lru_cache(maxsize=1 << 16)
def statement_digest(statement: tuple) -> bytes:
    """Digest of a signed statement such as ``("preKeyStep", sq, leader, value)``.

    Field order is significant; every element must have a deterministic repr
    (ints, strings, None, and frozen dataclasses of those).
    """
    return hashlib.blake2b(repr(statement).encode(), digest_size=16).digest()


def _mac(key: bytes, *parts: bytes) -> bytes:
    h = hashlib.blake2b(key=key, digest_size=16)
    for p in parts:
        h.update(p)
    return h.digest()


@dataclass(frozen=True)
class SigShare:
    signer: int
    payload_digest: bytes
    mac: bytes


@dataclass(frozen=True)
class ThresholdSig:
    payload_digest: bytes
    signer_set: frozenset
    threshold: int
    mac: bytes


class ThresholdBackend(Protocol):
    """What protocol code needs from a threshold-signature scheme."""

    n: int

    def signer(self, party: int) -> "Signer": ...

    def share_validate(self, statement: tuple, party: int, share: SigShare) -> bool: ...

    def threshold_sign(self, shares: Iterable[SigShare], threshold: int) -> ThresholdSig: ...

    def threshold_validate(self, statement: tuple, sig: ThresholdSig, threshold: int) -> bool: ...


class Signer:
    """Private share-signing capability of a single party."""

    __slots__ = ("party", "_key")

    def __init__(self, party: int, key: bytes):
        self.party = party
        self._key = key

    def share_sign(self, statement: tuple) -> SigShare:
        d = statement_digest(statement)
        return SigShare(self.party, d, _mac(self._key, d))


class MockThresholdScheme:
    """Trusted-dealer mock of a (k, n) threshold signature scheme.

    The threshold is chosen per signature (t+1 or n-t), matching how the
    protocol uses a single scheme at two thresholds.
    """

    def __init__(self, n: int, secret: bytes | str | int = b"dealer"):
        if not isinstance(secret, bytes):
            secret = str(secret).encode()
        self.n = n
        self._master = hashlib.blake2b(b"master" + secret, digest_size=32).digest()
        self._keys = [
            hashlib.blake2b(b"share-key:%d:" % i + secret, digest_size=32).digest()
            for i in range(n)
        ]
        self._verified: set = set()  # combined signatures whose MAC already checked out

    def signer(self, party: int) -> Signer:
        if not 0 <= party < self.n:
            raise ValueError(f"party {party} out of range for n={self.n}")
        return Signer(party, self._keys[party])

    def share_sign(self, party: int, statement: tuple) -> SigShare:
        return self.signer(party).share_sign(statement)

    def _share_ok(self, share: SigShare) -> bool:
        if not isinstance(share, SigShare) or not 0 <= share.signer < self.n:
            return False
        return share.mac == _mac(self._keys[share.signer], share.payload_digest)

    def share_validate(self, statement: tuple, party: int, share: SigShare) -> bool:
        return (
            isinstance(share, SigShare)
            and share.signer == party
            and share.payload_digest == statement_digest(statement)
            and self._share_ok(share)
        )

    def _sig_mac(self, digest: bytes, signers: frozenset, threshold: int) -> bytes:
        body = ",".join(map(str, sorted(signers))).encode()
        return _mac(self._master, digest, body, b"|%d" % threshold)

    def threshold_sign(self, shares: Iterable[SigShare], threshold: int) -> ThresholdSig:
        shares = list(shares)
        digests = {s.payload_digest for s in shares}
        if len(digests) > 1:
            raise MixedPayload(f"{len(digests)} distinct payloads among shares")
        for s in shares:
            if not self._share_ok(s):
                raise InvalidShare(f"share from {s.signer} does not validate")
        signers = frozenset(s.signer for s in shares)
        if len(signers) < threshold:
            raise InsufficientShares(f"{len(signers)} distinct signers < {threshold}")
        (digest,) = digests
        return ThresholdSig(digest, signers, threshold, self._sig_mac(digest, signers, threshold))

    def threshold_validate(self, statement: tuple, sig: ThresholdSig, threshold: int) -> bool:
        if not isinstance(sig, ThresholdSig):
            return False
        if sig.threshold < threshold or len(sig.signer_set) < sig.threshold:
            return False
        if any(not (isinstance(p, int) and 0 <= p < self.n) for p in sig.signer_set):
            return False
        if sig.payload_digest != statement_digest(statement):
            return False
        if sig in self._verified:
            return True
        if sig.mac != self._sig_mac(sig.payload_digest, sig.signer_set, sig.threshold):
            return False
        self._verified.add(sig)
        return True


def _prf(payload_digest: bytes, run_seed: int) -> int:
    key = hashlib.blake2b(b"coin:%d" % run_seed, digest_size=32).digest()
    return int.from_bytes(_mac(key, payload_digest)[:8], "big")


def hash_to_leader(coin_sig: ThresholdSig, n: int, run_seed: int) -> int:
    """Map a coin threshold signature to a 0-based party index.

    Depends only on the signed payload (not on which t+1 shares were
    combined), so every honest party gets the same leader for a wave.
    """
    return _prf(coin_sig.payload_digest, run_seed) % n


class LeaderCoin:
    """Per-run coin: only yields a leader for a valid t+1 coin signature."""

    def __init__(self, backend: ThresholdBackend, n: int, t: int, run_seed: int):
        self._backend = backend
        self._n = n
        self._t = t
        self._seed = run_seed

    def leader(self, sq: int, coin_sig: ThresholdSig) -> int:
        if not self._backend.threshold_validate(("coin", sq), coin_sig, self._t + 1):
            raise InvalidShare(f"coin signature for wave {sq} does not validate")
        return hash_to_leader(coin_sig, self._n, self._seed)
