import collections

import pytest

from optimistic_ba.crypto import LeaderCoin, MockThresholdScheme
from optimistic_ba.lbv import ALL, LbvInstance
from optimistic_ba.party import Party, ProtocolParams
from optimistic_ba.state import ExternalValidity, LocalState, Verifier

# acceptance lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def scheme():
    return MockThresholdScheme(4, secret="unit")


@pytest.fixture
def validity():
    return ExternalValidity("unit-domain")


@pytest.fixture
def verifier(scheme):
    return Verifier(scheme, 4, 1)


@pytest.fixture
def certify(scheme):
    """Threshold signature by ``signers`` over (tag, sq, leader, value)."""

    def make(tag, sq, leader, value, signers=(0, 1, 2), threshold=None):
        threshold = len(signers) if threshold is None else threshold
        shares = [scheme.share_sign(i, (tag, sq, leader, value)) for i in signers]
        return scheme.threshold_sign(shares, threshold)

    return make


class LbvNet:
    """n LBV instances for one (sq, leader) wired through an explicit queue.

    ``deliver`` pops messages in the order chosen by ``pick`` (FIFO by
    default) so tests can explore interleavings.
    """

    def __init__(self, n=4, t=1, sq=1, leader=0, secret="lbv", values=None):
        self.n, self.t = n, t
        self.scheme = MockThresholdScheme(n, secret=secret)
        self.validity = ExternalValidity("lbv-domain")
        self.verifier = Verifier(self.scheme, n, t)
        self.states = [LocalState() for _ in range(n)]
        for i, st in enumerate(self.states):
            st.VALUE = (values or {}).get(i) or self.validity.issue(f"v{i}")
        self.insts = [
            LbvInstance(sq, leader, i, self.verifier, self.scheme.signer(i), self.validity)
            for i in range(n)
        ]
        self.queue = collections.deque()
        self.sent = []

    def _post(self, src, outs):
        for dst, msg in outs:
            targets = range(self.n) if dst == ALL else [dst]
            for d in targets:
                self.queue.append((src, d, msg))
                self.sent.append((src, d, msg))

    def start(self, who=None):
        for i in who if who is not None else range(self.n):
            self._post(i, self.insts[i].start_view(self.states[i]))

    def deliver(self, pick=None, limit=10_000):
        while self.queue and limit:
            limit -= 1
            idx = pick(len(self.queue)) if pick else 0
            self.queue.rotate(-idx)
            src, dst, msg = self.queue.popleft()
            self.queue.rotate(idx)
            self._post(dst, self.insts[dst].on_message(self.states[dst], src, msg))


@pytest.fixture
def lbv_net():
    return LbvNet


@pytest.fixture
def make_party():
    """A real party (n=4, t=1 by default) for driving handlers directly."""

    def make(pid=0, n=4, t=1, delta=10, secret="party", value=None):
        scheme = MockThresholdScheme(n, secret=secret)
        validity = ExternalValidity("party-domain")
        p = Party(pid, ProtocolParams(n, t, delta), scheme, validity, LeaderCoin(scheme, n, t, 0))
        p.propose(value or validity.issue(f"v{pid}"))
        return p

    return make
