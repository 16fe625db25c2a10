import numpy as np
import pytest

from xyotto import _backend


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def random_hermitian(rng, scale=1.0):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    return scale * 0.5 * (A + A.conj().T)


needs_kernel = pytest.mark.skipif(not _backend.COMPILED, reason="compiled kernel not built")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
