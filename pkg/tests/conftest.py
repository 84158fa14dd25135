import numpy as np
import pytest

from mehlerlab.noise import NoiseSpec
from mehlerlab.spectral import dirichlet_spectrum


@pytest.fixture(scope="session")
def demo_model():
    """Interval spectrum with 64 modes."""
    return dirichlet_spectrum(1, 64)


@pytest.fixture(scope="session")
def demo_noise():
    """Diagonal noise with sigma1 = k^-1, sigma2 = k^-1.5, alpha = 1."""
    return NoiseSpec.power_law(64, 1.0, "diagonal", gamma1=-1.0, gamma2=-1.5)


@pytest.fixture(scope="session")
def elliptical_noise():
    return NoiseSpec.power_law(64, 1.0, "elliptical", gamma1=-1.0, gamma2=-1.5)


def rel_close(a, b, tol):
    return np.all(np.abs(np.asarray(a) - np.asarray(b)) <= tol * np.maximum(1.0, np.abs(b)))


_ACCEPTANCE: list = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
