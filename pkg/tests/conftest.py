import numpy as np
import pytest

from cepz import _accel


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request):
    """Run the test once per kernel implementation."""
    prev = _accel.set_numba(request.param == "numba")
    yield request.param
    _accel.set_numba(prev)


@pytest.fixture
def numpy_kernels():
    prev = _accel.set_numba(False)
    yield
    _accel.set_numba(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(mod.RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
