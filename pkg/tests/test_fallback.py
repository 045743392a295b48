import pytest

from optimistic_ba import RunConfig, run
from optimistic_ba.fallback import on_barrier_ready, on_coin_share, on_exchange, on_share_ready, on_view_done
from optimistic_ba.messages import BarrierReady, CoinShare, Exchange, ShareReady, YourViewDone
from optimistic_ba.party import Send
from optimistic_ba.simnet import Simulation
from optimistic_ba.state import Commit, Key

WAVE = 6  # first wave sq for n=4


@pytest.fixture
def p(make_party):
    party = make_party(pid=0)
    party._out = []
    return party


def _sent(party, kind):
    return [s for s in party._out if type(s) is Send and type(s.msg) is kind]


def test_third_view_done_invokes_barrier(p):
    on_view_done(p, 1, YourViewDone(WAVE))
    on_view_done(p, 2, YourViewDone(WAVE))
    assert not _sent(p, ShareReady)
    on_view_done(p, 3, YourViewDone(WAVE))
    out = _sent(p, ShareReady)
    assert sorted(s.dst for s in out) == [0, 1, 2, 3]


def test_duplicate_view_done_not_counted(p):
    for sender in (1, 1, 1, 2):
        on_view_done(p, sender, YourViewDone(WAVE))
    assert not _sent(p, ShareReady)


def test_view_done_outside_waves_ignored(p):
    for sender in (1, 2, 3):
        on_view_done(p, sender, YourViewDone(WAVE + 1))
    assert not _sent(p, ShareReady)
    assert WAVE + 1 not in p.waves


def _share(p, i, tag, sq=WAVE):
    return p.verifier.backend.share_sign(i, (tag, sq))


def test_share_ready_quorum_broadcasts_barrier(p):
    for i in (1, 2):
        on_share_ready(p, i, ShareReady(WAVE, _share(p, i, "shareReady")))
    assert not _sent(p, BarrierReady)
    on_share_ready(p, 3, ShareReady(WAVE, _share(p, 3, "shareReady")))
    assert len(_sent(p, BarrierReady)) == 4


def test_invalid_share_ready_dropped(p):
    on_share_ready(p, 1, ShareReady(WAVE, _share(p, 2, "shareReady")))
    on_share_ready(p, 2, ShareReady(WAVE, _share(p, 2, "coin")))
    assert p.wave(WAVE).S_barrier == {}


def _barrier(p, signers=(0, 1, 2), threshold=3):
    b = p.verifier.backend
    return b.threshold_sign([b.share_sign(i, ("shareReady", WAVE)) for i in signers], threshold)


def test_barrier_ready_echo_and_ready(p):
    on_barrier_ready(p, 2, BarrierReady(WAVE, _barrier(p)))
    assert p.wave(WAVE).READY
    assert len(_sent(p, BarrierReady)) == 4
    on_barrier_ready(p, 3, BarrierReady(WAVE, _barrier(p, (1, 2, 3))))
    assert len(_sent(p, BarrierReady)) == 4


def test_barrier_ready_below_quorum_dropped(p):
    on_barrier_ready(p, 2, BarrierReady(WAVE, _barrier(p, (0, 1), 2)))
    assert not p.wave(WAVE).READY
    assert not _sent(p, BarrierReady)


def test_coin_share_validation(p):
    on_coin_share(p, 1, CoinShare(WAVE, _share(p, 2, "coin")))
    on_coin_share(p, 2, CoinShare(WAVE, _share(p, 2, "shareReady")))
    on_coin_share(p, 3, CoinShare(WAVE, _share(p, 3, "coin")))
    assert list(p.wave(WAVE).S_coin) == [3]


def _commit(p, sq, leader, value):
    b = p.verifier.backend
    sig = b.threshold_sign([b.share_sign(i, ("lockStep", sq, leader, value)) for i in range(3)], 3)
    return Commit(value, sq, sig)


def test_exchange_commit_makes_receiver_decide(p):
    p.state.LEADERS[5] = 1
    v = p.validity.issue("exchanged")
    on_exchange(p, 2, Exchange(5, None, None, _commit(p, 5, 1, v)))
    assert p.decision() == v
    assert p.decide_time is not None


def test_exchange_with_stale_keys_changes_nothing(p):
    b = p.verifier.backend
    v = p.validity.issue("fresh")
    p.state.LEADERS.update({3: 2, 2: 1})
    fresh = Key(3, b.threshold_sign([b.share_sign(i, ("preKeyStep", 3, 2, v)) for i in range(3)], 3))
    p.state.KEY, p.state.VALUE = fresh, v
    w = p.validity.issue("stale")
    stale = Key(2, b.threshold_sign([b.share_sign(i, ("preKeyStep", 2, 1, w)) for i in range(3)], 3))
    for sender in (1, 2, 3):
        on_exchange(p, sender, Exchange(WAVE, stale, w, None))
    assert p.state.KEY is fresh and p.state.VALUE == v


def test_exchange_counts_each_sender_once(p):
    for sender in (1, 1, 2):
        on_exchange(p, sender, Exchange(WAVE, None, p.state.VALUE, None))
    assert p.exchange_senders(WAVE) == {1, 2}


class Recording(Simulation):
    def __init__(self, cfg):
        super().__init__(cfg)
        self.leaders = {}
        self.barrier_at_election = {}

    def elected(self, pid, sq, leader, now):
        if self.is_honest[pid]:
            self.leaders.setdefault(sq, set()).add(leader)
            if sq not in self.barrier_at_election:
                self.barrier_at_election[sq] = sum(
                    1 for q in self.parties if sq in q.waves and q.waves[sq].barrier_invoked
                )
        super().elected(pid, sq, leader, now)


@pytest.mark.parametrize("seed", range(8))
def test_all_honest_elect_same_leader(seed):
    sim = Recording(RunConfig(n=7, f=2, mode="async", seed=seed, behavior="equivocate-leader"))
    sim.run()
    assert sim.leaders
    assert all(len(ls) == 1 for ls in sim.leaders.values())


@pytest.mark.parametrize("seed", range(8))
def test_barrier_needs_quorum_of_finished_leaders(seed):
    sim = Recording(RunConfig(n=4, mode="async", seed=seed))
    sim.run()
    assert all(k >= 3 for k in sim.barrier_at_election.values())


@pytest.mark.parametrize("n", [4, 7, 10])
def test_withheld_coin_shares_cannot_block_election(n):
    r = run(RunConfig(n=n, f=(n - 1) // 3, mode="async", behavior="silent", seed=5))
    assert r.waves >= 1 and r.all_decided and not r.capped


@pytest.mark.parametrize("seed", range(5))
def test_decided_parties_halt_after_wave(seed):
    sim = Simulation(RunConfig(n=4, mode="async", seed=seed))
    r = sim.run()
    assert r.all_decided and r.quiescent
    assert r.halted == 4
    assert all(sim.parties[i].waiting_on.startswith("gate") for i in sim.honest_ids)


@pytest.mark.parametrize("seed", range(5))
def test_round_robin_slot_commits_after_gst(seed):
    """Elections rigged to always pick a silent party: only the round-robin
    slot can decide, and after GST its honest leader does."""
    n = 4

    class NoLuck(Simulation):
        def __init__(self, cfg):
            super().__init__(cfg)
            for p in self.parties:
                p.coin = _RiggedCoin(p.coin, 3)

    cfg = RunConfig(n=n, f=1, corrupted=(3,), mode="es", gst=400, seed=seed, behavior="silent")
    r = NoLuck(cfg).run()
    assert r.all_decided and r.agreement_ok
    assert r.elected_completed and not any(r.elected_completed)
    sq = {r.decide_phase[i] for i in r.honest_ids}
    assert all(s > n + 1 and (s - n) % 2 == 1 for s in sq)


class _RiggedCoin:
    def __init__(self, coin, leader):
        self.coin = coin
        self.fixed = leader

    def leader(self, sq, sig):
        self.coin.leader(sq, sig)
        return self.fixed
