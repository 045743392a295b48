import pytest

from optimistic_ba import CapExceeded, ConfigError, RunConfig, run
from optimistic_ba.adversary import DelayPolicy
from optimistic_ba.messages import KeyRequest
from optimistic_ba.simnet import Simulation

D = 10


class Greedy(DelayPolicy):
    """Asks for ten Δ on every message."""

    def delay(self, src, dst, msg, window, rng):
        return 10 * window.delta


class Instant(DelayPolicy):
    def delay(self, src, dst, msg, window, rng):
        return 0


class Probe(Simulation):
    def __init__(self, cfg):
        super().__init__(cfg)
        self.delays = []

    def schedule_delivery(self, src, dst, msg, send_time):
        at = super().schedule_delivery(src, dst, msg, send_time)
        self.delays.append((send_time, at))
        return at


@pytest.mark.parametrize("cfg", [
    RunConfig(n=4, seed=9),
    RunConfig(n=7, f=2, mode="async", seed=9, behavior="equivocate-leader"),
    RunConfig(n=7, f=2, mode="es", gst=300, seed=9, delay_policy="starve-leader", behavior="follow-protocol"),
])
def test_same_config_same_bytes(cfg):
    assert run(cfg).to_json() == run(cfg).to_json()


def test_seed_changes_the_run():
    a = run(RunConfig(n=7, mode="async", seed=1)).to_json()
    b = run(RunConfig(n=7, mode="async", seed=2)).to_json()
    assert a != b


@pytest.mark.parametrize("policy", ["uniform", "max", "fixed", "starve-leader"])
def test_synchronous_delays_within_delta(policy):
    sim = Probe(RunConfig(n=7, f=2, seed=3, delay_policy=policy, behavior="follow-protocol"))
    sim.run()
    assert sim.delays
    assert all(0 < at - sent <= D for sent, at in sim.delays)


def test_post_gst_request_clamped_to_delta():
    sim = Simulation(RunConfig(n=4, mode="es", gst=50))
    sim.policy = Greedy()
    assert sim.schedule_delivery(0, 1, KeyRequest(), 80) == 80 + D
    assert sim.report.clamped_deliveries == 1
    # sent before GST: held until GST + Δ at the latest
    assert sim.schedule_delivery(0, 1, KeyRequest(), 20) == 50 + D
    assert sim.report.clamped_deliveries == 2


def test_async_delivery_never_at_send_time():
    sim = Simulation(RunConfig(n=4, mode="async"))
    sim.policy = Instant()
    assert sim.schedule_delivery(0, 1, KeyRequest(), 40) == 41
    assert sim.report.clamped_deliveries == 1


def test_async_requests_pass_unclamped():
    sim = Simulation(RunConfig(n=4, mode="async"))
    sim.policy = Greedy()
    assert sim.schedule_delivery(0, 1, KeyRequest(), 40) == 40 + 10 * D
    assert sim.report.clamped_deliveries == 0


class SelfTrace(Simulation):
    def __init__(self, cfg):
        super().__init__(cfg)
        self.self_sends = []

    def _send(self, src, dst, msg):
        if src == dst:
            self.self_sends.append(self.now)
        super()._send(src, dst, msg)

    def _push(self, time, prio, kind, dst, src, msg):
        if kind == 0 and src == dst and msg is not None:
            assert time == self.now
        super()._push(time, prio, kind, dst, src, msg)


def test_self_messages_are_free_and_immediate():
    sim = SelfTrace(RunConfig(n=4, seed=0))
    r = sim.run()
    assert sim.self_sends
    # 11 words to each of the n-1 peers; the leader's own copies add nothing
    assert r.honest_words == 11 * 3
    assert set(r.decide_times.values()) == {7 * D}


def test_words_by_phase_partitions_total():
    for cfg in (RunConfig(n=7, f=2, mode="async", seed=4),
                RunConfig(n=7, f=2, seed=4, behavior="spam-help")):
        r = run(cfg)
        assert sum(r.words_by_phase.values()) == r.honest_words
        assert sum(r.words_by_message_type.values()) == r.honest_words
        assert r.honest_to_honest_words <= r.honest_words


@pytest.mark.parametrize("kw", [
    dict(n=3, t=1),
    dict(n=4, f=2),
    dict(n=4, f=-1),
    dict(n=4, f=1, corrupted=(0, 1)),
    dict(n=4, f=1, corrupted=(7,)),
    dict(n=4, delta=0),
    dict(n=4, mode="partial"),
    dict(n=4, mode="es"),
    dict(n=4, mode="es", gst=-5),
    dict(n=4, behavior="nope"),
    dict(n=4, delay_policy="nope"),
    dict(n=4, max_waves=0),
])
def test_bad_configs_rejected(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


def test_defaults():
    cfg = RunConfig(n=10, f=2, mode="async")
    assert cfg.t == 3 and cfg.corrupted == (0, 1)
    assert cfg.time_cap == 10_000 * D and cfg.async_max == 5 * D
    assert cfg.effective_gst is None
    assert RunConfig(n=4).effective_gst == 0
    assert RunConfig(n=4, mode="es", gst=7).effective_gst == 7


def test_time_cap_reports_partial_run():
    cfg = RunConfig(n=4, f=1, seed=0, max_time=5 * D)
    r = run(cfg)
    assert r.capped and not r.all_decided
    assert r.end_time <= 5 * D
    with pytest.raises(CapExceeded) as err:
        run(cfg, raise_on_cap=True)
    assert err.value.report.to_json() == r.to_json()


def test_uncapped_runs_do_not_raise():
    r = run(RunConfig(n=4, seed=0), raise_on_cap=True)
    assert not r.capped and r.quiescent


@pytest.mark.parametrize("seed", range(10))
def test_starved_party_is_honest(seed):
    sim = Simulation(RunConfig(n=7, f=2, seed=seed, delay_policy="starve-leader"))
    assert sim.policy.target in sim.honest_ids


def test_advance_is_resumable():
    cfg = RunConfig(n=7, f=2, mode="async", seed=6)
    sim = Simulation(cfg)
    for tick in range(0, 20_000, 37):
        sim.advance(tick)
    assert sim.run().to_json() == run(cfg).to_json()
