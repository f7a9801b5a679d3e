import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from malleable import sources
from malleable.dist import JointDistribution

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def joint_distributions(draw, max_x=5, max_y=4, allow_zeros=True):
    kx = draw(st.integers(1, max_x))
    ky = draw(st.integers(1, max_y))
    lo = 0 if allow_zeros else 1
    w = draw(st.lists(st.integers(lo, 20), min_size=kx * ky, max_size=kx * ky))
    if sum(w) == 0:
        w[0] = 1
    arr = np.array(w, dtype=float).reshape(kx, ky)
    return JointDistribution.from_matrix(arr / arr.sum())


@pytest.fixture
def dsbs():
    return sources.dsbs(0.11)


@pytest.fixture
def copy2():
    return sources.copy_source(2)


@pytest.fixture
def indep():
    return sources.uniform_independent(2, 2)


@pytest.fixture
def mod2():
    return sources.mod_source(4, 2)


@pytest.fixture
def block():
    return sources.block_diagonal()


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion_report(request):
    """emit(number, passed, text) records one PASS/FAIL line for the terminal summary."""
    lines = request.config.stash.setdefault(_CRITERIA, {})

    def emit(number, passed, text):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {text}"
        lines[number] = line
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
