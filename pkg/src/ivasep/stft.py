"""Short-time Fourier transform with least-squares overlap-add inversion.

Spectrograms are complex arrays of shape ``(F, T, K)``: one-sided frequency
bins, frames, channels. Waveforms are real arrays of shape ``(K, n_samples)``.

The forward DFT is unnormalized and the inverse carries the ``1/N`` factor
(numpy's ``rfft``/``irfft`` convention).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputTooShort, InvalidInput, ShapeMismatch

WINDOWS = ("hamming", "hann", "sqrt_hann")


@dataclass(frozen=True)
class StftConfig:
    fft_len: int = 2048
    hop: int = 1024
    window: str = "hamming"
    sample_rate: int = 16000

    def __post_init__(self):
        n = self.fft_len
        if n < 16 or n & (n - 1):
            raise InvalidInput(f"fft_len must be a power of two >= 16, got {n}")
        if not 0 < self.hop <= n or n % self.hop:
            raise InvalidInput(f"hop must divide fft_len and lie in (0, fft_len], got {self.hop}")
        if self.window not in WINDOWS:
            raise InvalidInput(f"unknown window {self.window!r}; choose from {WINDOWS}")
        if self.sample_rate <= 0:
            raise InvalidInput("sample_rate must be positive")

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2 + 1


def analysis_window(cfg: StftConfig) -> np.ndarray:
    """Periodic analysis window of length ``fft_len``."""
    n = np.arange(cfg.fft_len)
    phase = 2.0 * np.pi * n / cfg.fft_len
    if cfg.window == "hamming":
        return 0.54 - 0.46 * np.cos(phase)
    hann = 0.5 - 0.5 * np.cos(phase)
    if cfg.window == "hann":
        return hann
    return np.sqrt(hann)


def synthesis_window(cfg: StftConfig) -> np.ndarray:
    """Canonical least-squares dual of the analysis window for steady-state frames.

    ``g[n] = w[n] / sum_m w[n - m*hop]^2``. :func:`synthesize` applies the same
    normalization with the actual frame coverage, so edges are exact as well.
    """
    w = analysis_window(cfg)
    denom = np.zeros(cfg.hop)
    for start in range(0, cfg.fft_len, cfg.hop):
        denom += w[start:start + cfg.hop] ** 2
    return w / np.tile(denom, cfg.fft_len // cfg.hop)


def n_frames(n_samples: int, cfg: StftConfig) -> int:
    return -(-(n_samples - cfg.fft_len) // cfg.hop) + 1


def analyze(signal, cfg: StftConfig) -> np.ndarray:
    """Multichannel STFT; frame ``t`` covers samples ``[t*hop, t*hop + fft_len)``.

    The signal is zero-padded at the end so the last frame is complete.
    Accepts ``(n_samples,)`` or ``(K, n_samples)``; returns ``(F, T, K)``.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeMismatch(f"expected (K, n_samples) waveform, got shape {x.shape}", stage="stft")
    n = x.shape[1]
    if n < cfg.fft_len:
        raise InputTooShort(f"signal has {n} samples, need at least fft_len={cfg.fft_len}", stage="stft")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("waveform has non-finite samples", stage="stft")

    t = n_frames(n, cfg)
    padded = np.zeros((x.shape[0], (t - 1) * cfg.hop + cfg.fft_len))
    padded[:, :n] = x
    idx = np.arange(t)[:, None] * cfg.hop + np.arange(cfg.fft_len)[None, :]
    frames = padded[:, idx] * analysis_window(cfg)  # (K, T, N)
    spec = np.fft.rfft(frames, axis=-1)  # (K, T, F)
    return np.ascontiguousarray(spec.transpose(2, 1, 0))


def synthesize(spec, cfg: StftConfig, length=None) -> np.ndarray:
    """Inverse STFT by weighted overlap-add; returns ``(K, n_samples)``.

    Each frame is multiplied by the analysis window and the sum is divided by
    the accumulated squared window, which is the least-squares inverse. Samples
    with no window coverage are set to zero.
    """
    y = np.asarray(spec)
    if y.ndim == 2:
        y = y[:, :, None]
    if y.ndim != 3 or y.shape[0] != cfg.n_bins:
        raise ShapeMismatch(
            f"spectrogram shape {y.shape} inconsistent with fft_len={cfg.fft_len}", stage="istft"
        )
    _, t, k = y.shape
    frames = np.fft.irfft(y.transpose(2, 1, 0), n=cfg.fft_len, axis=-1)  # (K, T, N)
    w = analysis_window(cfg)
    total = (t - 1) * cfg.hop + cfg.fft_len
    out = np.zeros((k, total))
    norm = np.zeros(total)
    for i in range(t):
        sl = slice(i * cfg.hop, i * cfg.hop + cfg.fft_len)
        out[:, sl] += frames[:, i, :] * w
        norm[sl] += w * w
    covered = norm > 1e-12
    out[:, covered] /= norm[covered]
    out[:, ~covered] = 0.0
    if length is not None:
        if length > total:
            out = np.pad(out, ((0, 0), (0, length - total)))
        out = out[:, :length]
    return out
