import numpy as np
import pytest
from hypothesis import settings

from dfsqrc.experiments.config import load_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bell():
    psi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())


@pytest.fixture
def default_cfg():
    return load_config()


CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[CRITERIA] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; ``report(ok, text)`` also prints it, ``ok=None`` marks it informational."""
    lines = request.config.stash[CRITERIA]

    def report(ok: bool | None, text: str) -> bool | None:
        line = f"{'INFO' if ok is None else 'PASS' if ok else 'FAIL'}  {text}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def random_hermitian(rng, d, scale=1.0):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (g + g.conj().T) / 2


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# property tests draw the same examples on every run
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")
