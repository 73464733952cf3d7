import numpy as np
import pytest

from qphase.model import generate_instance, generate_signal
from qphase.rng import RngState


def make_instance(p=20, s=3, m=200, sigma=0.0, seed=1, stream=0):
    rng = RngState(seed, stream_id=stream)
    theta = generate_signal(rng, p, s)
    return generate_instance(rng, theta, m, sigma)


@pytest.fixture
def small_inst():
    return make_instance(p=8, s=2, m=40, sigma=0.5)


@pytest.fixture
def noiseless_inst():
    return make_instance()


@pytest.fixture
def numpy_backend(monkeypatch):
    monkeypatch.setenv("QPHASE_NUMBA", "0")


def central_diff(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g
