import pytest
from hypothesis import HealthCheck, settings

from qdelay import load_device

settings.register_profile("qdelay", deadline=None, max_examples=60, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qdelay")

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for a numbered criterion, then assert it."""

    def record(number, name, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {name}  ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def dev1a():
    return load_device("device1a")


@pytest.fixture(scope="session")
def dev1b():
    return load_device("device1b")


@pytest.fixture(scope="session")
def dev2():
    return load_device("device2")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
