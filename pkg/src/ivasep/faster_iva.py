"""FasterIVA: majorize-minimize IVA with eigenvector updates and unitary projection.

Works on whitened spectrograms ``xw`` of shape ``(F, T, K)``. Demixing
matrices are stored as ``(F, K, K)`` arrays whose row ``k`` is ``w_{k,f}^H``,
so ``y_{f,t} = W_f xw_{f,t}``.

One iteration:

1. ``r_{k,t} = ||y_{k,:,t}||`` over all bins,
2. ``V_{k,f} = mean_t mm_weight(r_{k,t}) xw_{f,t} xw_{f,t}^H``,
3. ``w_{k,f}`` <- eigenvector of ``V_{k,f}`` with the smallest eigenvalue,
4. ``W_f`` <- nearest unitary matrix to the stacked rows.
"""

import time
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import linalg
from .errors import InvalidInput, IvasepError, ShapeMismatch
from .parallel import map_chunks
from .source_model import ContrastModel, contrast, mm_weight
from .trace import ConvergenceTrace, TraceRecord

ALGO_TAG = "fasteriva"


@dataclass
class IterationStats:
    surrogate_cost: float
    surrogate_at_expansion: float
    iva_cost: float
    matrix_change: float
    # per (f, k): smallest eigenvalue, quadratic form of the previous row and of the new
    # (pre-projection) eigenvector, both under the freshly built V_{k,f}
    smallest_eigenvalues: np.ndarray
    rayleigh_prev: np.ndarray
    rayleigh_new: np.ndarray
    degenerate_bins: np.ndarray

    @property
    def lambda_sums(self) -> np.ndarray:
        """Sum over bins of the smallest eigenvalue, per channel."""
        return self.smallest_eigenvalues.sum(axis=0)


def demix(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``y_{f,t} = W_f x_{f,t}`` for ``(F, K, K)`` matrices and ``(F, T, K)`` data."""
    return x @ np.swapaxes(w, 1, 2)


def identity_init(n_bins: int, n_channels: int) -> np.ndarray:
    return np.tile(np.eye(n_channels, dtype=np.complex128), (n_bins, 1, 1))


def random_unitary_init(n_bins: int, n_channels: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary matrices, one per bin."""
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((n_bins, n_channels, n_channels, 2)) @ np.array([1.0, 1j])
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def compute_norms(y) -> np.ndarray:
    """Broadband norms ``r[t, k] = sqrt(sum_f |y[f, t, k]|^2)``."""
    y = np.asarray(y)
    power = y.real * y.real + y.imag * y.imag
    # reduction over the leading axis adds bins in index order
    return np.sqrt(np.add.reduce(power, axis=0))


def weighted_covariances(xw, r, model: ContrastModel) -> np.ndarray:
    """All ``V_{k,f}`` as an ``(F, K, K, K)`` array indexed ``[f, k]``."""
    x = np.asarray(xw, dtype=np.complex128)
    phi = mm_weight(model, r)
    return _weighted_covariances(x, np.atleast_2d(phi))


def _weighted_covariances(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    n_bins, n_frames, n_ch = x.shape
    xt = np.swapaxes(x, 1, 2)
    xc = x.conj()
    v = np.empty((n_bins, phi.shape[1], n_ch, n_ch), dtype=np.complex128)
    for k in range(phi.shape[1]):
        v[:, k] = (xt * phi[:, k]) @ xc / n_frames
    v = 0.5 * (v + np.swapaxes(v, -1, -2).conj())
    idx = np.arange(n_ch)
    v[..., idx, idx] = v[..., idx, idx].real
    return v


def weighted_cov(xw, r, model: ContrastModel, k: int, f: int) -> np.ndarray:
    """Single ``V_{k,f}``; see :func:`weighted_covariances`."""
    x = np.asarray(xw, dtype=np.complex128)
    r = np.asarray(r, dtype=np.float64)
    return weighted_covariances(x[f:f + 1], r[:, k:k + 1], model)[0, 0]


def quadratic_forms(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``w_{k,f}^H V_{k,f} w_{k,f}`` for rows of ``w`` ``(F, K, K)`` and ``v`` ``(F, K, K, K)``."""
    rows = w.conj()  # row k of W is w_k^H, so its conjugate is w_k
    vw = np.einsum("fkij,fkj->fki", v, rows)
    return np.einsum("fki,fki->fk", rows.conj(), vw).real


def update_bin(v) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvector update followed by unitary projection.

    ``v`` holds ``V_{k,f}`` for all ``k`` of one bin ``(K, K, K)`` or a stack of
    bins ``(F, K, K, K)``. Returns ``(w_tilde, w, degenerate)``: the stacked
    smallest eigenvectors (as rows ``w^H``), their nearest unitary matrix, and
    a flag for bins whose stack was rank deficient.
    """
    v = np.asarray(v, dtype=np.complex128)
    single = v.ndim == 3
    if single:
        v = v[None]
    _, vecs = linalg.smallest_eigvec(v)  # (F, K, K): [f, k, :] = w_{k,f}
    w_tilde = vecs.conj()
    w, degenerate = linalg.polar_unitary(w_tilde)
    if single:
        return w_tilde[0], w[0], degenerate[0]
    return w_tilde, w, degenerate


def matrix_change(prev: np.ndarray, cur: np.ndarray) -> float:
    """``(1 / (F K^2)) sum_f ||W_prev_f - W_cur_f||_F^2``."""
    prev = np.asarray(prev)
    cur = np.asarray(cur)
    if prev.shape != cur.shape:
        raise ShapeMismatch(f"state shapes differ: {prev.shape} vs {cur.shape}")
    n_bins, k, _ = cur.shape
    d = prev - cur
    return float(np.sum(d.real * d.real + d.imag * d.imag) / (n_bins * k * k))


def iva_cost(y: np.ndarray, w: np.ndarray, model: ContrastModel) -> float:
    """``sum_k mean_t G(r_{k,t}) - 2 sum_f log|det W_f|``."""
    r = compute_norms(y)
    g = np.asarray(contrast(model, r))
    _, logdet = np.linalg.slogdet(w)
    return float(np.sum(np.mean(g, axis=0)) - 2.0 * np.sum(logdet))


def _check_state(xw: np.ndarray, w: np.ndarray) -> None:
    if xw.ndim != 3:
        raise ShapeMismatch(f"expected (F, T, K) spectrogram, got {xw.shape}", stage=ALGO_TAG)
    n_bins, _, k = xw.shape
    if w.shape != (n_bins, k, k):
        raise ShapeMismatch(f"demixing state {w.shape} does not match data {xw.shape}", stage=ALGO_TAG)


def iterate(xw, w, model: ContrastModel, workers: Optional[int] = None):
    """One full sweep. Returns ``(w_new, y_new, stats)``."""
    xw = np.asarray(xw, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    _check_state(xw, w)

    y = demix(w, xw)
    r = compute_norms(y)
    phi = np.atleast_2d(mm_weight(model, r))

    def work(sl: slice):
        v = _weighted_covariances(xw[sl], phi)
        vals, vecs = linalg.smallest_eigvec(v)
        w_tilde = vecs.conj()
        w_new, degenerate = linalg.polar_unitary(w_tilde)
        return (
            w_new,
            vals,
            quadratic_forms(w[sl], v),
            quadratic_forms(w_tilde, v),
            quadratic_forms(w_new, v),
            degenerate,
        )

    try:
        parts = map_chunks(work, xw.shape[0], workers)
    except IvasepError as exc:
        raise exc.with_context(stage=ALGO_TAG)
    w_new, lam, q_prev, q_tilde, q_new, degenerate = (np.concatenate(p, axis=0) for p in zip(*parts))

    y_new = demix(w_new, xw)
    stats = IterationStats(
        surrogate_cost=float(0.5 * np.sum(q_new)),
        surrogate_at_expansion=float(0.5 * np.sum(q_prev)),
        iva_cost=iva_cost(y_new, w_new, model),
        matrix_change=matrix_change(w, w_new),
        smallest_eigenvalues=lam,
        rayleigh_prev=q_prev,
        rayleigh_new=q_tilde,
        degenerate_bins=np.nonzero(degenerate)[0],
    )
    return w_new, y_new, stats


def record_from_stats(iteration: int, stats: IterationStats, wall_time_ns: int, algo: str = ALGO_TAG) -> TraceRecord:
    return TraceRecord(
        iter=iteration,
        algo=algo,
        surrogate_cost=stats.surrogate_cost,
        iva_cost=stats.iva_cost,
        matrix_change=stats.matrix_change,
        wall_time_ns=wall_time_ns,
        extra={
            "lambda_sums": [float(v) for v in stats.lambda_sums],
            "degenerate_bins": [int(b) for b in stats.degenerate_bins],
        },
    )


def run(
    xw,
    model: ContrastModel,
    max_iters: int,
    init: Optional[np.ndarray] = None,
    tol: float = 0.0,
    workers: Optional[int] = None,
    callback: Optional[Callable[[int, np.ndarray, IterationStats, TraceRecord], None]] = None,
    start_iter: int = 1,
):
    """Run up to ``max_iters`` iterations from ``init`` (identity by default).

    Stops early when the matrix-change statistic drops below ``tol``
    (``tol=0`` runs all iterations). ``callback(l, W, stats, record)`` is called
    after every iteration and may fill metric fields of ``record``.
    Returns ``(W, trace)``.
    """
    if max_iters < 1:
        raise InvalidInput(f"max_iters must be >= 1, got {max_iters}", stage=ALGO_TAG)
    xw = np.asarray(xw, dtype=np.complex128)
    if xw.ndim != 3:
        raise ShapeMismatch(f"expected (F, T, K) spectrogram, got {xw.shape}", stage=ALGO_TAG)
    n_bins, _, k = xw.shape
    w = identity_init(n_bins, k) if init is None else np.array(init, dtype=np.complex128)

    trace = ConvergenceTrace()
    for i in range(max_iters):
        t0 = time.perf_counter_ns()
        w, _, stats = iterate(xw, w, model, workers)
        elapsed = time.perf_counter_ns() - t0
        rec = record_from_stats(start_iter + i, stats, elapsed)
        if callback is not None:
            callback(start_iter + i, w, stats, rec)
        trace.append(rec)
        if stats.matrix_change < tol:
            break
    return w, trace
