import numpy as np
import pytest

from simsemcom.channel import ChannelParams, sample_channel
from simsemcom.diffraction import build_propagation
from simsemcom.geometry import ReceiverGeometry, SimGeometry
from simsemcom.link import PskConfig
from simsemcom.optimizer import init_stack
from simsemcom.patterns import TargetPattern


class SmallCase:
    def __init__(self, L=3, N=9, rows=2, cols=2, seed=0):
        rng = np.random.default_rng(seed)
        self.geom = SimGeometry(L, N)
        self.rx = ReceiverGeometry(rows, cols)
        self.prop = build_propagation(self.geom)
        self.channel = sample_channel(ChannelParams(), self.rx, self.geom, rng)
        self.psk = PskConfig()
        bits = rng.integers(0, 2, rows * cols).astype(float)
        bits[0] = 1.0
        self.target = TargetPattern(bits, (rows, cols))
        self.stack = init_stack(self.geom, rng)


@pytest.fixture
def small_case():
    return SmallCase()


@pytest.fixture
def make_case():
    return SmallCase


ACCEPTANCE_RESULTS = []


def record_criterion(number, title, passed, detail):
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
