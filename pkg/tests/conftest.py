import numpy as np
import pytest

from irs_wsr.channel import ScenarioGeometry, sample_scenario
from irs_wsr.system import ChannelSet, SystemConfig

ACCEPTANCE_LINES = []


def scenario_instance(seed, N=8, M=8, S=2, K=4):
    """Channels drawn from the reference geometry (S surfaces placed on a ring if S != 2)."""
    cfg = SystemConfig(N, M, S, K, power=1.0, noise_power=1e-11)
    if S == 2:
        geometry = ScenarioGeometry()
    else:
        angles = np.linspace(0.2, 1.3, S)
        geometry = ScenarioGeometry(irs_positions=[(26 * np.cos(a), 26 * np.sin(a)) for a in angles])
    return sample_scenario(geometry, cfg, np.random.default_rng(seed)), cfg


def gaussian_instance(seed, N=3, M=2, S=2, K=2, noise=0.5):
    """Unit-scale i.i.d. channels; keeps SINRs moderate for oracle comparisons."""
    rng = np.random.default_rng(seed)
    SM = S * M
    H = rng.standard_normal((SM, N)) + 1j * rng.standard_normal((SM, N))
    G = rng.standard_normal((K, SM)) + 1j * rng.standard_normal((K, SM))
    cfg = SystemConfig(N, M, S, K, power=1.0, noise_power=noise, bs_rows=1, irs_rows=1)
    return ChannelSet(H, G), cfg


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
