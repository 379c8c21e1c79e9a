import numpy as np
import pytest

from conftest import random_hermitian
from ivasep import aux_iva, faster_iva, metrics, whitening
from ivasep.errors import DegenerateInput, InvalidInput, SingularMatrix
from ivasep.source_model import ContrastModel

LAPLACE = ContrastModel()


def mixture(rng, f=6, t=600, k=2):
    scale = np.sqrt(rng.exponential(1.0, (1, t, k)))
    s = scale * (rng.standard_normal((f, t, k)) + 1j * rng.standard_normal((f, t, k)))
    a = rng.standard_normal((f, k, k)) + 1j * rng.standard_normal((f, k, k))
    return s @ np.swapaxes(a, 1, 2), s, a


class TestIpUpdate:
    def test_scalar_case(self):
        w = aux_iva.ip_update_bin(np.array([[[4.0]]]), np.array([[1.0]]))
        assert w[0, 0] == pytest.approx(0.5)

    def test_identity_fixed_point(self):
        v = np.tile(np.eye(3), (3, 1, 1))
        assert np.allclose(aux_iva.ip_update_bin(v, np.eye(3)), np.eye(3))

    def test_normalization(self, rng):
        v = np.stack([random_hermitian(rng, 2, psd=True) for _ in range(2)])
        w = aux_iva.ip_update_bin(v, np.eye(2))
        for k in range(2):
            row = w[k].conj()
            assert np.real(row.conj() @ v[k] @ row) == pytest.approx(1.0, abs=1e-10)

    def test_rows_satisfy_projection_condition(self, rng):
        v = np.stack([random_hermitian(rng, 3, psd=True) for _ in range(3)])
        w = aux_iva.ip_update_bin(v, np.eye(3))
        # the last updated row solves (W V_k) w_k ∝ e_k with the final W, up to the diagonal loading
        sol = w @ v[2] @ w[2].conj()
        loading = aux_iva.COV_FLOOR_RATIO * np.trace(v[2]).real * np.linalg.norm(w) ** 2
        assert np.allclose(sol[:2], 0, atol=10 * loading)

    def test_batched_matches_single(self, rng):
        v = np.stack([[random_hermitian(rng, 2, psd=True) for _ in range(2)] for _ in range(4)])
        w0 = rng.standard_normal((4, 2, 2)) + 1j * rng.standard_normal((4, 2, 2))
        batched = aux_iva.ip_update_bin(v, w0)
        for f in range(4):
            assert np.allclose(batched[f], aux_iva.ip_update_bin(v[f], w0[f]))

    def test_singular(self):
        w = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(SingularMatrix) as info:
            aux_iva.ip_update_bin(np.tile(np.eye(2), (1, 2, 1, 1)), w[None], bin_offset=7)
        assert info.value.bin == 7

    def test_silent_bin_left_unchanged(self):
        v = np.zeros((2, 2, 2, 2))
        v[0] = np.eye(2)
        w0 = np.tile(np.eye(2, dtype=complex), (2, 1, 1))
        out = aux_iva.ip_update_bin(v, w0)
        assert np.array_equal(out[1], w0[1])


class TestRun:
    def test_monotone_cost(self, rng):
        x, *_ = mixture(rng)
        _, trace = aux_iva.run(x, LAPLACE, 30)
        cost = np.array(trace.column("iva_cost"))
        assert np.all(np.diff(cost) <= 1e-8)

    def test_warm_start_from_fasteriva(self, rng):
        x, *_ = mixture(rng)
        xw = whitening.apply(whitening.fit(x), x)
        w, _ = faster_iva.run(xw, LAPLACE, 10)
        _, trace = aux_iva.run(xw, LAPLACE, 20, init=w, start_iter=11)
        cost = np.diff(trace.column("iva_cost"))
        assert np.mean(cost <= 1e-8) >= 0.9
        assert trace[0].iter == 11

    def test_separates(self, rng):
        x, s, a = mixture(rng, f=1, t=2000)
        w, _ = aux_iva.run(x, LAPLACE, 30)
        sir = metrics.instantaneous_sir(w[0] @ a[0], np.mean(np.abs(s[0]) ** 2, axis=0))
        assert np.min(sir) > 20

    def test_zero_input(self):
        with pytest.raises(DegenerateInput):
            aux_iva.run(np.zeros((3, 10, 2), dtype=complex), LAPLACE, 2)

    def test_zero_iterations(self, rng):
        with pytest.raises(InvalidInput):
            aux_iva.run(mixture(rng)[0], LAPLACE, 0)

    def test_deterministic(self, rng):
        x, *_ = mixture(rng)
        w1, t1 = aux_iva.run(x, LAPLACE, 5)
        w2, t2 = aux_iva.run(x, LAPLACE, 5, workers=2)
        assert np.array_equal(w1, w2)
        assert t1.column("iva_cost") == t2.column("iva_cost")
