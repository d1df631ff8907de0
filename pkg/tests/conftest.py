import pytest
from hypothesis import HealthCheck, settings
from simcache import sim_day

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def clean_485():
    """One noise-free session at a deterministic 4.85 ms latency."""
    return sim_day(seed=3, latency=((4.85, 1.0),))


def pytest_terminal_summary(terminalreporter):
    from simcache import ACCEPTANCE_LOG

    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
