import time
from dataclasses import replace

import pytest

from deepmso.sim import SimConfig, run_episode

_acceptance_lines = []


@pytest.fixture(scope="session")
def base_config():
    return SimConfig()


class _Runs:
    """Session cache of closed-loop episodes keyed by config; also keeps wall times."""

    def __init__(self):
        self.logs = {}
        self.seconds = {}

    def get(self, cfg):
        if cfg not in self.logs:
            t0 = time.perf_counter()
            self.logs[cfg] = run_episode(cfg)
            self.seconds[cfg] = time.perf_counter() - t0
        return self.logs[cfg]


@pytest.fixture(scope="session")
def runs():
    return _Runs()


@pytest.fixture(scope="session")
def base_on(runs, base_config):
    return runs.get(replace(base_config, nn=True))


@pytest.fixture(scope="session")
def base_off(runs, base_config):
    return runs.get(replace(base_config, nn=False))


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed at the end of the session."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _acceptance_lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
