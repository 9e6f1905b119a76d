import numpy as np
import pytest

from localpower import _accel, data, linalg_core


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel path."""
    if request.param == "numba" and not _accel.NUMBA_AVAILABLE:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_accel, "USE_JIT", request.param == "numba")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_psd(rng, d, rank=None):
    B = rng.standard_normal((d, rank or d))
    return linalg_core.symmetrize(B @ B.T)


def geometric_matrix(n, d=30, ratio=0.8, seed=0):
    spec = data.SpectrumSpec(data.geometric_sigmas(d, ratio), n, seed)
    return data.synthetic_spectrum(spec)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
