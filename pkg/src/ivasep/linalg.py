"""Small complex matrix kernels.

All functions accept a single ``(K, K)`` matrix or a stack ``(..., K, K)`` and
operate matrix-wise. The Hermitian eigensolver is a cyclic Jacobi method with
per-matrix convergence masking, so the result for one matrix never depends on
what else is in the batch.
"""

from typing import NamedTuple

import numpy as np

from .errors import DegenerateMatrix, InvalidInput, SingularMatrix

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
HERMITIAN_RTOL = 1e-12
EIG_FLOOR_RATIO = 1e-10
MAX_COND = 1e12

# components whose modulus is within this ratio of the maximum count as "largest"
_PHASE_TIE_RTOL = 1e-10
# eigenvalues closer than this (relative to ||m||_F) are treated as tied
_EIG_TIE_RTOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues ``(..., K)`` ascending; eigenvectors ``(..., K, K)`` as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square_stack(m) -> np.ndarray:
    a = np.array(m, dtype=np.complex128, copy=True)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidInput(f"expected (..., K, K) matrices, got shape {a.shape}")
    if a.shape[-1] == 0:
        raise InvalidInput("empty matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


def frobenius_norm(m: np.ndarray) -> np.ndarray:
    """Frobenius norm over the last two axes."""
    m = np.asarray(m)
    return np.sqrt(np.sum(_abs2(m.astype(np.complex128)), axis=(-2, -1)))


def hermitian(m, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate and symmetrize a (stack of) Hermitian matrix.

    Raises ``InvalidInput`` if ``m`` differs from its conjugate transpose by more
    than ``rtol * ||m||_F``. The returned matrix is exactly Hermitian with a
    real diagonal.
    """
    a = _as_square_stack(m)
    ah = np.swapaxes(a, -1, -2).conj()
    asym = frobenius_norm(a - ah)
    scale = frobenius_norm(a)
    if np.any(asym > rtol * scale):
        raise InvalidInput("matrix is not Hermitian")
    a = 0.5 * (a + ah)
    idx = np.arange(a.shape[-1])
    a[..., idx, idx] = a[..., idx, idx].real
    return a


def _off_norm(a: np.ndarray) -> np.ndarray:
    mask = ~np.eye(a.shape[-1], dtype=bool)
    return np.sqrt(np.sum(_abs2(a) * mask, axis=(-2, -1)))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """One complex Jacobi rotation zeroing entry (p, q) of each matrix in ``a``."""
    apq = a[:, p, q]
    app = a[:, p, p].real
    aqq = a[:, q, q].real
    mag = np.sqrt(_abs2(apq))
    phase = apq / mag

    tau = (aqq - app) / (2.0 * mag)
    sign = np.where(tau >= 0.0, 1.0, -1.0)
    abs_tau = np.abs(tau)
    big = abs_tau > 1e150
    safe_tau = np.where(big, 1.0, abs_tau)
    t = np.where(big, 0.5 / np.where(big, abs_tau, 1.0), 1.0 / (safe_tau + np.sqrt(1.0 + safe_tau * safe_tau)))
    t = sign * t
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    # G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on indices (p, q)
    gpp = c
    gpq = s
    gqp = -s * phase.conj()
    gqq = c * phase.conj()

    col_p = a[:, :, p].copy()
    col_q = a[:, :, q].copy()
    a[:, :, p] = col_p * gpp[:, None] + col_q * gqp[:, None]
    a[:, :, q] = col_p * gpq[:, None] + col_q * gqq[:, None]

    row_p = a[:, p, :].copy()
    row_q = a[:, q, :].copy()
    a[:, p, :] = row_p * gpp[:, None] + row_q * gqp.conj()[:, None]
    a[:, q, :] = row_p * gpq[:, None] + row_q * gqq.conj()[:, None]

    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = a[:, p, p].real
    a[:, q, q] = a[:, q, q].real

    vp = v[:, :, p].copy()
    vq = v[:, :, q].copy()
    v[:, :, p] = vp * gpp[:, None] + vq * gqp[:, None]
    v[:, :, q] = vp * gpq[:, None] + vq * gqq[:, None]


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first largest-modulus component is real and >= 0."""
    mod = np.sqrt(_abs2(vecs))
    top = mod.max(axis=-2, keepdims=True)
    candidate = mod >= (1.0 - _PHASE_TIE_RTOL) * top
    idx = np.argmax(candidate, axis=-2)  # first True per column
    pivot = np.take_along_axis(vecs, idx[..., None, :], axis=-2)[..., 0, :]
    pivot_mod = np.take_along_axis(mod, idx[..., None, :], axis=-2)[..., 0, :]
    rot = np.ones_like(pivot)
    nz = pivot_mod > 0
    rot[nz] = pivot[nz].conj() / pivot_mod[nz]
    out = vecs * rot[..., None, :]
    np.put_along_axis(out, idx[..., None, :], pivot_mod[..., None, :].astype(out.dtype), axis=-2)
    return out


def _sort_pairs(vals: np.ndarray, vecs: np.ndarray, scale: np.ndarray):
    order = np.argsort(vals, axis=-1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    if vals.shape[-1] < 2:
        return vals, vecs
    gaps = np.diff(vals, axis=-1)
    tied = np.any(gaps <= _EIG_TIE_RTOL * scale[:, None], axis=-1)
    for b in np.nonzero(tied)[0]:
        vals[b], vecs[b] = _break_ties(vals[b], vecs[b], _EIG_TIE_RTOL * scale[b])
    return vals, vecs


def _break_ties(vals: np.ndarray, vecs: np.ndarray, tol: float):
    n = vals.shape[0]
    order = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and vals[stop] - vals[stop - 1] <= tol:
            stop += 1
        cluster = list(range(start, stop))
        cluster.sort(key=lambda i: tuple(x for z in vecs[:, i] for x in (z.real, z.imag)))
        order.extend(cluster)
        start = stop
    order = np.asarray(order)
    return vals[order], vecs[:, order]


def eigh(m, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Hermitian eigendecomposition by cyclic complex Jacobi rotations.

    Eigenvalues come out ascending. Each eigenvector has unit norm and its
    first largest-modulus component is real and non-negative. Tied eigenvalues
    are ordered by the lexicographic order of their (phase-fixed) eigenvectors.

    A sweep is applied to a matrix only while its off-diagonal Frobenius mass
    exceeds ``tol * ||m||_F``.
    """
    a = hermitian(m)
    batch_shape = a.shape[:-2]
    k = a.shape[-1]
    a = a.reshape(-1, k, k)
    n = a.shape[0]
    v = np.tile(np.eye(k, dtype=np.complex128), (n, 1, 1))
    scale = frobenius_norm(a)

    active = _off_norm(a) > tol * scale
    for _ in range(max_sweeps):
        if not active.any():
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                sel = active & (_abs2(a[:, p, q]) > 0.0)
                if sel.all():
                    _rotate(a, v, p, q)
                    continue
                idx = np.nonzero(sel)[0]
                if idx.size == 0:
                    continue
                sub_a = a[idx]
                sub_v = v[idx]
                _rotate(sub_a, sub_v, p, q)
                a[idx] = sub_a
                v[idx] = sub_v
        active &= _off_norm(a) > tol * scale

    vals = np.diagonal(a, axis1=-2, axis2=-1).real.copy()
    vecs = _fix_phase(v)
    vals, vecs = _sort_pairs(vals, vecs, scale)
    return EigenDecomposition(vals.reshape(batch_shape + (k,)), vecs.reshape(batch_shape + (k, k)))


def smallest_eigvec(m):
    """Return ``(eigenvalue, eigenvector)`` for the smallest eigenvalue of ``m``."""
    vals, vecs = eigh(m)
    return vals[..., 0], vecs[..., :, 0]


def _reassemble(vecs: np.ndarray, diag: np.ndarray) -> np.ndarray:
    out = (vecs * diag[..., None, :]) @ np.swapaxes(vecs, -1, -2).conj()
    out = 0.5 * (out + np.swapaxes(out, -1, -2).conj())
    return out


def inv_sqrt(m, eig_floor_ratio: float = EIG_FLOOR_RATIO) -> np.ndarray:
    """Inverse principal square root of a Hermitian PSD matrix.

    Eigenvalues are clamped from below at ``eig_floor_ratio * lambda_max``
    before inversion, which also absorbs small negative round-off.
    """
    vals, vecs = eigh(m)
    top = vals[..., -1]
    if np.any(top <= 0.0):
        bad = np.argwhere(np.atleast_1d(top) <= 0.0)[0]
        raise DegenerateMatrix(f"matrix has no positive eigenvalue (index {tuple(bad)})")
    floored = np.maximum(vals, eig_floor_ratio * top[..., None])
    return _reassemble(vecs, 1.0 / np.sqrt(floored))


def inverse(m, max_cond: float = MAX_COND) -> np.ndarray:
    """Matrix inverse with a condition-number guard."""
    a = _as_square_stack(m)
    cond = np.linalg.cond(a)
    bad = ~np.isfinite(cond) | (cond > max_cond)
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise SingularMatrix(
            f"matrix is singular to working precision (index {tuple(where)})",
            bin=int(where[0]) if a.ndim == 3 else None,
        )
    return np.linalg.inv(a)


def polar_unitary(m, rank_rtol: float = EIG_FLOOR_RATIO):
    """Nearest unitary matrix ``(m m^H)^{-1/2} m`` in the Frobenius sense.

    Returns ``(unitary, degenerate)`` where ``degenerate`` marks matrices whose
    Gram matrix ``m m^H`` had eigenvalues below ``rank_rtol * lambda_max``. For
    those, the partial isometry on the range of ``m`` is completed with an
    orthonormal pairing of the left and right null spaces, which is still a
    minimizer of the Frobenius distance.
    """
    a = _as_square_stack(m)
    batch_shape = a.shape[:-2]
    k = a.shape[-1]
    a = a.reshape(-1, k, k)
    gram = a @ np.swapaxes(a, -1, -2).conj()
    vals, vecs = eigh(gram)
    top = vals[:, -1]
    if np.any(top <= 0.0):
        raise DegenerateMatrix("cannot project the zero matrix onto the unitary group")
    degenerate = vals[:, 0] <= rank_rtol * top
    out = _reassemble(vecs, 1.0 / np.sqrt(np.maximum(vals, rank_rtol * top[:, None]))) @ a
    for b in np.nonzero(degenerate)[0]:
        out[b] = _complete_isometry(a[b], vals[b], vecs[b], rank_rtol)

    # one refinement pass when round-off left the result visibly off the manifold
    err = frobenius_norm(out @ np.swapaxes(out, -1, -2).conj() - np.eye(k))
    redo = np.nonzero(err > 1e-13)[0]
    if redo.size:
        g = out[redo] @ np.swapaxes(out[redo], -1, -2).conj()
        gv, gu = eigh(g)
        out[redo] = _reassemble(gu, 1.0 / np.sqrt(gv)) @ out[redo]
    return out.reshape(batch_shape + (k, k)), degenerate.reshape(batch_shape)


def _complete_isometry(a: np.ndarray, vals: np.ndarray, vecs: np.ndarray, rank_rtol: float) -> np.ndarray:
    k = a.shape[0]
    keep = vals > rank_rtol * vals[-1]
    u_range = vecs[:, keep]
    u_null = vecs[:, ~keep]
    partial = (u_range / np.sqrt(vals[keep])) @ u_range.conj().T @ a
    row_proj = partial.conj().T @ partial
    _, rv = eigh(np.eye(k) - row_proj)
    v_null = rv[:, k - u_null.shape[1]:]
    return partial + u_null @ v_null.conj().T
