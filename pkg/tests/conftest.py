import numpy as np
import pytest

from csremote import Plant, SignalSpace, build_gram

ALPHA = 0.5


def example_plant(x0=None):
    a = ALPHA
    return Plant([[0.0, 1.0], [-a, -a - 1.0]], [0.0, 1.0], [-a, 1.0], x0)


def conj_symmetric(rng, N, scale=1.0):
    """Random coefficient vector of a real signal (theta[-m] = conj(theta[m]))."""
    M = (N - 1) // 2
    theta = np.zeros(N, dtype=complex)
    side = scale * (rng.standard_normal(M) + 1j * rng.standard_normal(M))
    theta[M + 1:] = side
    theta[:M] = np.conj(side[::-1])
    theta[M] = scale * rng.standard_normal()
    return theta


@pytest.fixture(scope="session")
def plant():
    return example_plant()


@pytest.fixture(scope="session")
def space():
    return SignalSpace(2 * np.pi, 100)


@pytest.fixture(scope="session")
def gram(plant, space):
    return build_gram(plant, space)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Recorder for one PASS/FAIL line per acceptance criterion."""
    def record(number, title, passed, detail):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {title} | {detail}")
