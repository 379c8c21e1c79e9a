"""Per-bin whitening with the principal inverse square root of the covariance."""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InsufficientData, ShapeMismatch


@dataclass
class WhiteningTransform:
    """``q[f]`` maps bin ``f`` to unit covariance; ``cov[f]`` is its sample covariance."""

    q: np.ndarray
    cov: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.q.shape[0]


def sample_covariance(spec: np.ndarray) -> np.ndarray:
    """``(1/T) sum_t x_t x_t^H`` per bin, for a ``(F, T, K)`` spectrogram."""
    x = np.asarray(spec, dtype=np.complex128)
    cov = np.swapaxes(x, 1, 2) @ x.conj() / x.shape[1]
    cov = 0.5 * (cov + np.swapaxes(cov, 1, 2).conj())
    idx = np.arange(x.shape[2])
    cov[:, idx, idx] = cov[:, idx, idx].real
    return cov


def fit(spec, eig_floor_ratio: float = linalg.EIG_FLOOR_RATIO) -> WhiteningTransform:
    x = np.asarray(spec, dtype=np.complex128)
    if x.ndim != 3:
        raise ShapeMismatch(f"expected (F, T, K) spectrogram, got shape {x.shape}", stage="whitening")
    _, t, k = x.shape
    if t < k:
        raise InsufficientData(f"need at least K={k} frames, got {t}", stage="whitening")
    cov = sample_covariance(x)
    # silent bins carry no information; leave them untouched
    silent = np.all(cov == 0.0, axis=(1, 2))
    q = np.tile(np.eye(k, dtype=np.complex128), (x.shape[0], 1, 1))
    if not silent.all():
        q[~silent] = linalg.inv_sqrt(cov[~silent], eig_floor_ratio)
    return WhiteningTransform(q=q, cov=cov)


def apply(w: WhiteningTransform, spec) -> np.ndarray:
    x = np.asarray(spec, dtype=np.complex128)
    if x.ndim != 3 or x.shape[0] != w.n_bins or x.shape[2] != w.q.shape[1]:
        raise ShapeMismatch(
            f"spectrogram shape {x.shape} does not match transform with "
            f"{w.n_bins} bins and {w.q.shape[1]} channels",
            stage="whitening",
        )
    # x~_{f,t} = Q_f x_{f,t}  <=>  X~[f] = X[f] @ Q_f^T
    return x @ np.swapaxes(w.q, 1, 2)
