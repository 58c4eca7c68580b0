import time

import pytest

from axialsig.curves import make_preset
from axialsig.table import build_table

ACCEPTANCE_LINES = []
SESSION_START = [time.perf_counter()]


def pytest_sessionstart(session):
    SESSION_START[0] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so the wall-time criterion sees the whole suite
    items.sort(key=lambda it: it.nodeid.startswith("tests/test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def session_start():
    return SESSION_START[0]


# tables shared between unit and acceptance tests (building N = 512 takes seconds)


@pytest.fixture(scope="session")
def monomial_512():
    return build_table(make_preset("monomial", {"m": 1}), 512)


@pytest.fixture(scope="session")
def sine_512():
    return build_table(make_preset("sine"), 512)


@pytest.fixture(scope="session")
def zero_512():
    return build_table(make_preset("zero"), 512)


@pytest.fixture(scope="session")
def monomial_20():
    return build_table(make_preset("monomial", {"m": 1}), 20)
