import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optimistic_ba import crypto
from optimistic_ba.crypto import (
    InsufficientShares,
    InvalidShare,
    LeaderCoin,
    MixedPayload,
    MockThresholdScheme,
    hash_to_leader,
)


def test_share_round_trip(scheme):
    share = scheme.share_sign(0, ("m",))
    assert scheme.share_validate(("m",), 0, share)


def test_share_wrong_message(scheme):
    share = scheme.share_sign(0, ("m",))
    assert not scheme.share_validate(("m2",), 0, share)


def test_share_wrong_signer(scheme):
    share = scheme.share_sign(0, ("m",))
    assert not scheme.share_validate(("m",), 1, share)


def test_share_relabelled_signer_rejected(scheme):
    share = scheme.share_sign(0, ("m",))
    forged = dataclasses.replace(share, signer=1)
    assert not scheme.share_validate(("m",), 1, forged)


def test_share_from_other_dealer_rejected(scheme):
    other = MockThresholdScheme(4, secret="someone-else")
    assert not scheme.share_validate(("m",), 0, other.share_sign(0, ("m",)))


def test_threshold_n_minus_t(scheme):
    shares = [scheme.share_sign(i, ("m",)) for i in range(3)]
    sig = scheme.threshold_sign(shares, 3)
    assert scheme.threshold_validate(("m",), sig, 3)
    assert not scheme.threshold_validate(("m2",), sig, 3)


def test_threshold_too_few(scheme):
    shares = [scheme.share_sign(i, ("m",)) for i in range(2)]
    with pytest.raises(InsufficientShares):
        scheme.threshold_sign(shares, 3)


def test_threshold_t_plus_one(scheme):
    shares = [scheme.share_sign(i, ("m",)) for i in (1, 3)]
    sig = scheme.threshold_sign(shares, 2)
    assert scheme.threshold_validate(("m",), sig, 2)
    # a t+1 signature does not pass where n-t is required
    assert not scheme.threshold_validate(("m",), sig, 3)


def test_duplicate_signer_counts_once(scheme):
    share = scheme.share_sign(0, ("m",))
    with pytest.raises(InsufficientShares):
        scheme.threshold_sign([share, share, scheme.share_sign(1, ("m",))], 3)


def test_mixed_payload(scheme):
    shares = [scheme.share_sign(0, ("m",)), scheme.share_sign(1, ("m",)), scheme.share_sign(2, ("x",))]
    with pytest.raises(MixedPayload):
        scheme.threshold_sign(shares, 3)


def test_forged_share_rejected_by_combiner(scheme):
    shares = [scheme.share_sign(i, ("m",)) for i in range(3)]
    shares[1] = dataclasses.replace(shares[1], mac=bytes(16))
    with pytest.raises(InvalidShare):
        scheme.threshold_sign(shares, 3)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda s: dataclasses.replace(s, signer_set=frozenset({0, 1, 3})),
        lambda s: dataclasses.replace(s, threshold=4, signer_set=frozenset({0, 1, 2, 3})),
        lambda s: dataclasses.replace(s, mac=bytes(16)),
        lambda s: dataclasses.replace(s, signer_set=frozenset({0, 1, 7})),
    ],
)
def test_mutated_threshold_sig_rejected(scheme, mutate):
    sig = scheme.threshold_sign([scheme.share_sign(i, ("m",)) for i in range(3)], 3)
    assert not scheme.threshold_validate(("m",), mutate(sig), 3)


def test_hash_to_leader_deterministic(scheme):
    sig = scheme.threshold_sign([scheme.share_sign(i, ("coin", 9)) for i in (0, 1)], 2)
    assert hash_to_leader(sig, 4, 5) == hash_to_leader(sig, 4, 5)


def test_hash_to_leader_is_prf_mod_n(scheme, monkeypatch):
    monkeypatch.setattr(crypto, "_prf", lambda digest, seed: 7)
    sig = scheme.threshold_sign([scheme.share_sign(i, ("coin", 9)) for i in (0, 1)], 2)
    assert hash_to_leader(sig, 4, 0) == 3


def test_hash_to_leader_ignores_share_subset(scheme):
    a = scheme.threshold_sign([scheme.share_sign(i, ("coin", 6)) for i in (0, 1)], 2)
    b = scheme.threshold_sign([scheme.share_sign(i, ("coin", 6)) for i in (2, 3)], 2)
    assert hash_to_leader(a, 4, 1) == hash_to_leader(b, 4, 1)


@pytest.mark.parametrize("n", [4, 7])
def test_leader_distribution_uniform(n):
    scheme = MockThresholdScheme(n, secret="coin-uniformity")
    counts = np.zeros(n)
    sqs = 10_000
    for sq in range(sqs):
        sig = scheme.threshold_sign([scheme.share_sign(i, ("coin", sq)) for i in range(2)], 2)
        counts[hash_to_leader(sig, n, 42)] += 1
    freq = counts / sqs
    assert np.all(np.abs(freq - 1 / n) <= 0.05 / n)
    expected = sqs / n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 0.999 quantile of chi-square with n-1 = 3 and 6 degrees of freedom
    assert chi2 < {4: 16.27, 7: 22.46}[n]


def test_leader_coin_requires_valid_coin(scheme):
    coin = LeaderCoin(scheme, 4, 1, run_seed=0)
    good = scheme.threshold_sign([scheme.share_sign(i, ("coin", 6)) for i in (0, 2)], 2)
    assert 0 <= coin.leader(6, good) < 4
    with pytest.raises(InvalidShare):
        coin.leader(8, good)
    lone = scheme.threshold_sign([scheme.share_sign(0, ("coin", 6))], 1)
    with pytest.raises(InvalidShare):
        coin.leader(6, lone)


@settings(max_examples=60, deadline=None)
@given(
    st.tuples(st.sampled_from(["preKeyStep", "keyStep", "lockStep", "coin"]), st.integers(0, 50), st.integers(0, 6)),
    st.sets(st.integers(0, 6), min_size=1),
    st.integers(1, 7),
)
def test_threshold_sign_iff_enough_signers(statement, signers, threshold):
    scheme = MockThresholdScheme(7, secret="prop")
    shares = [scheme.share_sign(i, statement) for i in sorted(signers)]
    if len(signers) >= threshold:
        sig = scheme.threshold_sign(shares, threshold)
        assert scheme.threshold_validate(statement, sig, threshold)
        assert sig.signer_set == frozenset(signers)
    else:
        with pytest.raises(InsufficientShares):
            scheme.threshold_sign(shares, threshold)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.text(max_size=8), st.text(max_size=8))
def test_share_binds_statement(party, a, b):
    scheme = MockThresholdScheme(4, secret="prop")
    share = scheme.share_sign(party, ("x", a))
    assert scheme.share_validate(("x", b), party, share) == (a == b)
