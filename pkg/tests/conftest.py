import numpy as np
import pytest

from superres.model import GridSpec, build_sensing_matrix


@pytest.fixture(scope="session")
def fine_phi():
    return build_sensing_matrix(GridSpec(150, 50))


@pytest.fixture(scope="session")
def small_phi():
    return build_sensing_matrix(GridSpec(30, 10))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line and assert on it.

    The lines are echoed immediately and again in the terminal summary so
    they survive output capture.
    """
    lines = request.config.stash[_VERDICTS]

    def check(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
