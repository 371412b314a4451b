import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cfonebit.channel import sample_channel
from cfonebit.config import NetworkConfig

settings.register_profile(
    "suite", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_channel():
    """A 3-UE / 6-antenna noise-normalized channel, fixed seed."""
    cfg = NetworkConfig(num_aps=6, num_ues=3, seed=11)
    return sample_channel(cfg, np.random.default_rng(11))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
