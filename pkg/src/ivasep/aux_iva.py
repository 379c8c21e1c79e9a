"""AuxIVA with iterative-projection (IP) updates.

Same data layout as :mod:`ivasep.faster_iva`, but demixing matrices are only
required to be invertible. The auxiliary covariance uses the conventional
half weight, ``U_{k,f} = (1/2) mean_t mm_weight(r_{k,t}) x_{f,t} x_{f,t}^H``,
so that the normalization ``w^H U w = 1`` is the exact minimizer of the
auxiliary function of ``sum_k E[G(r_k)] - 2 sum_f log|det W_f|``.
"""

import time
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateInput, InvalidInput, IvasepError, ShapeMismatch, SingularMatrix
from .faster_iva import (
    _weighted_covariances,
    compute_norms,
    demix,
    identity_init,
    iva_cost,
    matrix_change,
    quadratic_forms,
)
from .parallel import map_chunks
from .source_model import ContrastModel, mm_weight
from .trace import ConvergenceTrace, TraceRecord

ALGO_TAG = "auxiva"
COV_FLOOR_RATIO = 1e-10


def auxiliary_covariances(x, r, model: ContrastModel) -> np.ndarray:
    """``U_{k,f}`` for all bins and channels, ``(F, K, K, K)``."""
    phi = np.atleast_2d(mm_weight(model, r))
    return 0.5 * _weighted_covariances(np.asarray(x, dtype=np.complex128), phi)


def ip_update_bin(v, w, bin_offset: int = 0) -> np.ndarray:
    """Iterative-projection update of every row of ``W_f``.

    ``v`` is ``(K, K, K)`` (one bin) or ``(F, K, K, K)``; ``w`` matching
    ``(K, K)`` or ``(F, K, K)``. Rows are updated in order ``k = 0..K-1``, each
    reading the current ``W_f``:

        w_k <- (W_f V_k)^{-1} e_k,   w_k <- w_k / sqrt(w_k^H V_k w_k)
    """
    v = np.asarray(v, dtype=np.complex128)
    w = np.array(w, dtype=np.complex128, copy=True)
    single = w.ndim == 2
    if single:
        v, w = v[None], w[None]
    n_bins, k, _ = w.shape
    eye = np.eye(k, dtype=np.complex128)
    trace = np.trace(v, axis1=-2, axis2=-1).real
    # rows with an all-zero covariance (silent bins) carry no information: keep them
    silent = trace <= 0.0
    loaded = v + np.where(silent, 1.0, COV_FLOOR_RATIO * trace)[..., None, None] * eye

    for row in range(k):
        keep = w[:, row, :].copy()
        wv = w @ loaded[:, row]
        try:
            sol = np.linalg.solve(wv, np.broadcast_to(eye[:, row], (n_bins, k))[..., None])[..., 0]
        except np.linalg.LinAlgError:
            bad = _first_singular(wv)
            raise SingularMatrix(f"W V is singular while updating row {row}", stage=ALGO_TAG, bin=bin_offset + bad)
        if not np.all(np.isfinite(sol)):
            raise SingularMatrix(
                f"W V is singular while updating row {row}",
                stage=ALGO_TAG,
                bin=bin_offset + _first_singular(wv),
            )
        vs = np.einsum("fij,fj->fi", v[:, row], sol)
        denom = np.einsum("fi,fi->f", sol.conj(), vs).real
        weak = denom <= 0.0
        if np.any(weak):
            vs_l = np.einsum("fij,fj->fi", loaded[weak, row], sol[weak])
            denom[weak] = np.einsum("fi,fi->f", sol[weak].conj(), vs_l).real
        sol = sol / np.sqrt(denom)[:, None]
        w[:, row, :] = np.where(silent[:, row, None], keep, sol.conj())
    return w[0] if single else w


def _first_singular(m: np.ndarray) -> int:
    for i, mat in enumerate(m):
        try:
            if not np.all(np.isfinite(np.linalg.solve(mat, np.eye(mat.shape[0])))):
                return i
        except np.linalg.LinAlgError:
            return i
    return 0


def iterate(x, w, model: ContrastModel, workers: Optional[int] = None):
    """One AuxIVA sweep. Returns ``(w_new, y_new, stats)`` with ``stats`` a dict."""
    x = np.asarray(x, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if x.ndim != 3 or w.shape != (x.shape[0], x.shape[2], x.shape[2]):
        raise ShapeMismatch(f"state {w.shape} does not match data {x.shape}", stage=ALGO_TAG)
    y = demix(w, x)
    r = compute_norms(y)
    phi = np.atleast_2d(mm_weight(model, r))

    def work(sl: slice):
        u = 0.5 * _weighted_covariances(x[sl], phi)
        w_new = ip_update_bin(u, w[sl], bin_offset=sl.start)
        return w_new, quadratic_forms(w_new, u)

    try:
        parts = map_chunks(work, x.shape[0], workers)
    except IvasepError as exc:
        raise exc.with_context(stage=ALGO_TAG)
    w_new = np.concatenate([p[0] for p in parts], axis=0)
    quad = np.concatenate([p[1] for p in parts], axis=0)
    y_new = demix(w_new, x)
    stats = {
        "surrogate_cost": float(np.sum(quad)),
        "iva_cost": iva_cost(y_new, w_new, model),
        "matrix_change": matrix_change(w, w_new),
    }
    return w_new, y_new, stats


def run(
    x,
    model: ContrastModel,
    max_iters: int,
    init: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
    callback: Optional[Callable[[int, np.ndarray, dict, TraceRecord], None]] = None,
    start_iter: int = 1,
):
    """Run ``max_iters`` AuxIVA iterations. Returns ``(W, trace)``."""
    if max_iters < 1:
        raise InvalidInput(f"max_iters must be >= 1, got {max_iters}", stage=ALGO_TAG)
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 3:
        raise ShapeMismatch(f"expected (F, T, K) spectrogram, got {x.shape}", stage=ALGO_TAG)
    if not np.any(x):
        raise DegenerateInput("input spectrogram is identically zero", stage=ALGO_TAG)
    n_bins, _, k = x.shape
    w = identity_init(n_bins, k) if init is None else np.array(init, dtype=np.complex128)

    trace = ConvergenceTrace()
    for i in range(max_iters):
        t0 = time.perf_counter_ns()
        w, _, stats = iterate(x, w, model, workers)
        elapsed = time.perf_counter_ns() - t0
        rec = TraceRecord(iter=start_iter + i, algo=ALGO_TAG, wall_time_ns=elapsed, **stats)
        if callback is not None:
            callback(start_iter + i, w, stats, rec)
        trace.append(rec)
    return w, trace
