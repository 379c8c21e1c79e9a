import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_hermitian(rng, k, psd=False):
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    if psd:
        return a @ a.conj().T + 0.1 * np.eye(k)
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, k):
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def svd_polar(m):
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def unitarity_error(w):
    k = w.shape[-1]
    return np.linalg.norm(w @ np.swapaxes(w, -1, -2).conj() - np.eye(k), axis=(-2, -1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
