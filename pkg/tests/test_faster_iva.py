import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_unitary, svd_polar, unitarity_error
from ivasep import faster_iva, metrics, parallel, whitening
from ivasep.errors import InvalidInput, ShapeMismatch
from ivasep.source_model import ContrastModel

LAPLACE = ContrastModel()


def laplace_sources(rng, f, t, k):
    # complex Laplacian-like i.i.d. sources: Gaussian scale mixture with exponential variance
    scale = np.sqrt(rng.exponential(1.0, (1, t, k)))
    return scale * (rng.standard_normal((f, t, k)) + 1j * rng.standard_normal((f, t, k))) / np.sqrt(2)


def whitened_mixture(rng, f, t, k):
    s = laplace_sources(rng, f, t, k)
    a = np.stack([random_unitary(rng, k) for _ in range(f)])
    x = s @ np.swapaxes(a, 1, 2)
    wt = whitening.fit(x)
    return whitening.apply(wt, x), s, a, wt


class TestNorms:
    def test_zero(self):
        assert not np.any(faster_iva.compute_norms(np.zeros((4, 5, 2), dtype=complex)))

    def test_single_entry(self):
        y = np.zeros((4, 5, 2), dtype=complex)
        y[2, 3, 1] = 3j
        r = faster_iva.compute_norms(y)
        assert r[3, 1] == 3.0
        assert np.count_nonzero(r) == 1

    def test_against_loop_oracle(self, rng):
        y = rng.standard_normal((6, 7, 3)) + 1j * rng.standard_normal((6, 7, 3))
        r = faster_iva.compute_norms(y)
        for t in range(7):
            for k in range(3):
                acc = 0.0
                for f in range(6):
                    acc += abs(y[f, t, k]) ** 2
                assert r[t, k] == pytest.approx(np.sqrt(acc), rel=1e-12)


class TestWeightedCov:
    def test_constant_weight_is_sample_covariance(self, rng):
        x = rng.standard_normal((3, 50, 2)) + 1j * rng.standard_normal((3, 50, 2))
        r = rng.uniform(0.1, 3, (50, 2))
        v = faster_iva.weighted_cov(x, r, ContrastModel("generalized_gaussian", 2.0), k=1, f=2)
        assert np.allclose(v / 2.0, whitening.sample_covariance(x)[2])

    def test_hand_example(self):
        x = np.array([[[1.0, 0.0]]], dtype=complex)
        v = faster_iva.weighted_cov(x, np.array([[2.0, 1.0]]), LAPLACE, k=0, f=0)
        assert np.allclose(v, [[0.5, 0], [0, 0]])

    def test_zero_data(self):
        v = faster_iva.weighted_cov(np.zeros((1, 4, 2), dtype=complex), np.ones((4, 2)), LAPLACE, 0, 0)
        assert not np.any(v)

    def test_hermitian_psd(self, rng):
        x = rng.standard_normal((4, 30, 3)) + 1j * rng.standard_normal((4, 30, 3))
        v = faster_iva.weighted_covariances(x, faster_iva.compute_norms(x), LAPLACE)
        assert np.array_equal(v, np.swapaxes(v, -1, -2).conj())
        assert np.all(np.linalg.eigvalsh(v) >= -1e-10 * np.linalg.eigvalsh(v)[..., -1:])


class TestUpdateBin:
    def test_diagonal_gives_permutation(self):
        v = np.stack([np.diag([3.0, 1.0, 2.0]), np.diag([1.0, 2.0, 3.0]), np.diag([2.0, 3.0, 1.0])])
        w_tilde, w, degenerate = faster_iva.update_bin(v)
        p = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]])
        assert np.allclose(w_tilde, p)
        assert np.allclose(w, p)
        assert not degenerate

    def test_rows_are_smallest_eigenvectors(self, rng):
        from conftest import random_hermitian

        v = np.stack([random_hermitian(rng, 3, psd=True) for _ in range(3)])
        w_tilde, w, _ = faster_iva.update_bin(v)
        for k in range(3):
            vals = np.linalg.eigvalsh(v[k])
            row = w_tilde[k].conj()
            assert np.real(row.conj() @ v[k] @ row) == pytest.approx(vals[0], abs=1e-12)
        assert np.allclose(w, svd_polar(w_tilde), atol=1e-10)
        assert unitarity_error(w) < 1e-12

    def test_rank_deficient_flagged(self):
        v = np.stack([np.diag([1.0, 2.0]), np.diag([1.0, 3.0])])  # same minimizer for both rows
        w_tilde, w, degenerate = faster_iva.update_bin(v)
        assert degenerate
        assert unitarity_error(w) < 1e-12
        assert np.allclose(w_tilde[0], w_tilde[1])


class TestIterate:
    def test_unitarity_and_rayleigh_descent(self, rng):
        xw, *_ = whitened_mixture(rng, 9, 200, 3)
        w = faster_iva.identity_init(9, 3)
        for _ in range(6):
            w_prev = w
            w, _, stats = faster_iva.iterate(xw, w, LAPLACE)
            assert np.max(unitarity_error(w)) <= 1e-10
            assert np.all(stats.rayleigh_new <= stats.rayleigh_prev + 1e-12)
            assert stats.matrix_change == pytest.approx(faster_iva.matrix_change(w_prev, w))

    def test_tangency_of_surrogate(self, rng):
        xw, *_ = whitened_mixture(rng, 5, 300, 2)
        w = faster_iva.random_unitary_init(5, 2, seed=3)
        _, _, stats = faster_iva.iterate(xw, w, LAPLACE)
        r = faster_iva.compute_norms(faster_iva.demix(w, xw))
        contrast_sum = float(np.sum(np.mean(r, axis=0)))
        # Laplacian: G(r) = 0.5 * (1/r) * r^2 + r/2, summed over frames and channels
        assert contrast_sum == pytest.approx(stats.surrogate_at_expansion + 0.5 * contrast_sum, rel=1e-10)

    def test_instantaneous_separation(self, rng):
        xw, s, a, wt = whitened_mixture(rng, 1, 2000, 2)
        w, _ = faster_iva.run(xw, LAPLACE, 20)
        g = w[0] @ wt.q[0] @ a[0]
        sir = metrics.instantaneous_sir(g, np.mean(np.abs(s[0]) ** 2, axis=0))
        assert np.min(sir) > 20

    def test_fixed_point_on_separated_input(self, rng):
        s = laplace_sources(rng, 4, 3000, 2)
        xw = whitening.apply(whitening.fit(s), s)
        _, _, stats = faster_iva.iterate(xw, faster_iva.identity_init(4, 2), LAPLACE)
        assert stats.matrix_change < 1e-3

    def test_equivariance_to_unitary_rotation(self, rng):
        xw, *_ = whitened_mixture(rng, 4, 300, 3)
        u = np.stack([random_unitary(rng, 3) for _ in range(4)])
        x_rot = xw @ np.swapaxes(u, 1, 2)
        w1 = faster_iva.identity_init(4, 3)
        w2 = np.swapaxes(u, 1, 2).conj()
        for _ in range(4):
            w1, y1, _ = faster_iva.iterate(xw, w1, LAPLACE)
            w2, y2, _ = faster_iva.iterate(x_rot, w2, LAPLACE)
            # identical up to a phase per (bin, channel), which the eigenvector phase fix chooses
            assert np.allclose(np.abs(y1), np.abs(y2), atol=1e-8)
            ratio = np.sum(y1 * y2.conj(), axis=1)
            assert np.allclose(np.abs(ratio), np.sum(np.abs(y1) ** 2, axis=1), rtol=1e-8)

    def test_deterministic_across_worker_counts(self, rng):
        n_bins = 2 * parallel.BIN_CHUNK + 17
        xw, *_ = whitened_mixture(rng, n_bins, 40, 2)
        w0 = faster_iva.identity_init(n_bins, 2)
        a, ya, sa = faster_iva.iterate(xw, w0, LAPLACE, workers=1)
        b, yb, sb = faster_iva.iterate(xw, w0, LAPLACE, workers=3)
        assert np.array_equal(a, b) and np.array_equal(ya, yb)
        assert sa.iva_cost == sb.iva_cost and sa.surrogate_cost == sb.surrogate_cost

    def test_shape_mismatch(self, rng):
        xw, *_ = whitened_mixture(rng, 3, 50, 2)
        with pytest.raises(ShapeMismatch):
            faster_iva.iterate(xw, faster_iva.identity_init(4, 2), LAPLACE)


class TestRun:
    def test_zero_iterations(self, rng):
        xw, *_ = whitened_mixture(rng, 2, 50, 2)
        with pytest.raises(InvalidInput):
            faster_iva.run(xw, LAPLACE, 0)

    def test_trace_and_determinism(self, rng):
        xw, *_ = whitened_mixture(rng, 6, 300, 2)
        w1, t1 = faster_iva.run(xw, LAPLACE, 5)
        w2, t2 = faster_iva.run(xw, LAPLACE, 5)
        assert len(t1) == 5 and t1.column("iter") == [1, 2, 3, 4, 5]
        assert set(t1.algorithms) == {"fasteriva"}
        assert np.array_equal(w1, w2)
        for a, b in zip(t1, t2):
            assert (a.iva_cost, a.surrogate_cost, a.matrix_change) == (b.iva_cost, b.surrogate_cost, b.matrix_change)
            assert len(a.extra["lambda_sums"]) == 2

    def test_early_stop(self, rng):
        xw, *_ = whitened_mixture(rng, 4, 500, 2)
        _, trace = faster_iva.run(xw, LAPLACE, 50, tol=0.05)
        assert len(trace) < 50
        assert trace[-1].matrix_change < 0.05
        assert all(r.matrix_change >= 0.05 for r in trace.records[:-1])

    def test_random_init_is_unitary_and_seeded(self):
        a = faster_iva.random_unitary_init(5, 3, seed=1)
        assert np.max(unitarity_error(a)) < 1e-12
        assert np.array_equal(a, faster_iva.random_unitary_init(5, 3, seed=1))


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_property_unitary_and_descent(seed, k):
    rng = np.random.default_rng(seed)
    xw, *_ = whitened_mixture(rng, 3, 64, k)
    w = faster_iva.random_unitary_init(3, k, seed)
    for _ in range(3):
        w, _, stats = faster_iva.iterate(xw, w, LAPLACE)
        assert np.max(unitarity_error(w)) <= 1e-10
        assert np.all(stats.rayleigh_new <= stats.rayleigh_prev + 1e-12)


def test_lambda_sums_bounded_by_previous_rows(rng):
    # The per-iteration lambda sums are not monotone across iterations (V moves with r),
    # but each one is bounded by the quadratic form of the previous rows under the same V.
    xw, *_ = whitened_mixture(rng, 8, 400, 2)
    seen = []
    _, trace = faster_iva.run(xw, LAPLACE, 5, callback=lambda l, w, stats, rec: seen.append(stats))
    assert len(trace) == 5
    for stats, rec in zip(seen, trace):
        assert np.allclose(rec.extra["lambda_sums"], stats.lambda_sums)
        assert np.all(stats.lambda_sums <= stats.rayleigh_prev.sum(axis=0) + 1e-12 * 8)
