import numpy as np
import pytest

from ofdm_svr.grid import OfdmConfig

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(criterion: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return OfdmConfig(fft_size=64, occupied_subcarriers=37, cp_samples=8, sampling_rate=0.96e6,
                      pilot_spacing=6, symbols_per_frame=6, modulation_order=16)


@pytest.fixture(scope="session")
def lte5():
    return OfdmConfig()
