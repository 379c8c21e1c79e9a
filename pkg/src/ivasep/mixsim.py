"""Convolutive test mixtures: synthetic RIRs, SNR-controlled noise, WAV I/O.

Waveforms are ``(channels, samples)`` float64 arrays. Filter banks are
``(K mics, N sources, length)``. Randomness comes from Philox streams derived
from a single integer seed, one stream per purpose.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.io import wavfile
from scipy.signal import fftconvolve

from .errors import FormatMismatch, InvalidInput, ParseError, Unsupported

log = logging.getLogger(__name__)

RIR_MODES = ("synthetic_exponential", "file")
WAV_FORMATS = ("float32", "pcm16")

_STREAM_RIR = 1
_STREAM_NOISE = 2
_STREAM_SOURCES = 3


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class RirSpec:
    mode: str = "synthetic_exponential"
    n_mics: int = 2
    n_sources: int = 2
    length: int = 3200
    decay_t60: float = 0.2
    sample_rate: int = 16000
    # direct-path delays in samples, shape (n_mics, n_sources); drawn from the seed if None
    direct_delay: Optional[np.ndarray] = None
    max_delay: int = 8
    # tail amplitude relative to the direct path before peak normalization
    tail_gain: float = 0.2
    seed: int = 0
    paths: List[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.mode not in RIR_MODES:
            raise InvalidInput(f"unknown RIR mode {self.mode!r}; choose from {RIR_MODES}")
        if self.mode == "file":
            if not self.paths:
                raise InvalidInput("file RIR mode needs one WAV path per source")
            return
        if self.length < 1:
            raise InvalidInput("RIR length must be >= 1")
        if not self.decay_t60 > 0:
            raise InvalidInput("decay_t60 must be positive")
        if self.n_mics < 1 or self.n_sources < 1:
            raise InvalidInput("need at least one microphone and one source")
        if self.direct_delay is not None:
            d = np.asarray(self.direct_delay)
            if d.shape != (self.n_mics, self.n_sources):
                raise InvalidInput(f"direct_delay must have shape {(self.n_mics, self.n_sources)}")
            if np.any(d < 0) or np.any(d >= self.length):
                raise InvalidInput("direct delays must lie in [0, length)")


def synth_rir(spec: RirSpec) -> np.ndarray:
    """Filter bank ``(n_mics, n_sources, length)``.

    Each filter is a unit impulse at the direct-path delay followed by white
    Gaussian noise under an exponential envelope falling 60 dB per
    ``decay_t60`` seconds; the filter is then normalized to unit peak.
    """
    spec.validate()
    if spec.mode == "file":
        return load_rir_bank(spec.paths, spec.sample_rate)
    rng = rng_stream(spec.seed, _STREAM_RIR)
    k, n, length = spec.n_mics, spec.n_sources, spec.length
    if spec.direct_delay is not None:
        delays = np.asarray(spec.direct_delay, dtype=np.int64)
    else:
        hi = min(spec.max_delay, length - 1)
        delays = rng.integers(0, hi + 1, size=(k, n))
    noise = rng.standard_normal((k, n, length))
    rate = 3.0 * math.log(10.0) / (spec.decay_t60 * spec.sample_rate)

    bank = np.zeros((k, n, length))
    for m in range(k):
        for s in range(n):
            d = int(delays[m, s])
            lag = np.arange(length - d)
            h = np.zeros(length)
            h[d:] = spec.tail_gain * noise[m, s, : length - d] * np.exp(-rate * lag)
            h[d] = 1.0
            bank[m, s] = h / np.max(np.abs(h))
    return bank


def load_rir_bank(paths: Sequence[str], sample_rate: Optional[int] = None) -> np.ndarray:
    """One WAV per source, channels = microphones; returns ``(K, N, length)``."""
    filters = []
    for p in paths:
        data, fs = read_wav(p)
        if sample_rate is not None and fs != sample_rate:
            raise FormatMismatch(f"{p}: sample rate {fs} != {sample_rate}")
        filters.append(data)
    k = filters[0].shape[0]
    if any(f.shape[0] != k for f in filters):
        raise FormatMismatch("RIR files disagree on microphone count")
    length = max(f.shape[1] for f in filters)
    bank = np.zeros((k, len(filters), length))
    for s, f in enumerate(filters):
        bank[:, s, : f.shape[1]] = f
    return bank


@dataclass
class MixtureScenario:
    sources: np.ndarray  # (N, n_samples)
    rirs: np.ndarray  # (K, N, length)
    snr_db: float = 30.0
    seed: int = 0
    sample_rates: Optional[Sequence[int]] = None

    def validate(self) -> None:
        src = np.asarray(self.sources)
        if src.ndim != 2 or src.shape[1] == 0:
            raise InvalidInput(f"sources must be (N, n_samples), got {src.shape}")
        if self.rirs.ndim != 3 or self.rirs.shape[1] != src.shape[0]:
            raise InvalidInput(f"RIR bank {self.rirs.shape} does not match {src.shape[0]} sources")
        if self.rirs.shape[0] != src.shape[0]:
            raise InvalidInput("only determined mixtures (as many mics as sources) are supported")
        if self.sample_rates is not None and len(set(self.sample_rates)) > 1:
            raise FormatMismatch(f"sources have different sample rates: {sorted(set(self.sample_rates))}")


def mix(scenario: MixtureScenario) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ``(mixture (K, n), images (N, K, n))``.

    ``mixture = sum_n images[n] + noise`` with white Gaussian noise scaled so
    the clean-to-noise energy ratio over all channels equals ``snr_db``.
    ``snr_db = inf`` disables noise.
    """
    scenario.validate()
    src = np.asarray(scenario.sources, dtype=np.float64)
    n_src, n = src.shape
    k = scenario.rirs.shape[0]
    images = np.zeros((n_src, k, n))
    for s in range(n_src):
        for m in range(k):
            h = scenario.rirs[m, s]
            if h.size == 1:
                images[s, m] = h[0] * src[s]
            else:
                images[s, m] = fftconvolve(src[s], h)[:n]
    clean = np.zeros((k, n))
    for s in range(n_src):
        clean += images[s]

    if math.isinf(scenario.snr_db) and scenario.snr_db > 0:
        noise = np.zeros((k, n))
    else:
        noise = rng_stream(scenario.seed, _STREAM_NOISE).standard_normal((k, n))
        clean_energy = float(np.sum(clean * clean))
        noise *= math.sqrt(clean_energy / (float(np.sum(noise * noise)) * 10.0 ** (scenario.snr_db / 10.0)))
    return clean + noise, images


def speech_like_sources(n_sources: int, n_samples: int, sample_rate: int, seed: int) -> np.ndarray:
    """Amplitude-modulated Laplacian noise, ``(N, n_samples)``, unit RMS.

    Each source gets its own slowly varying envelope (syllable-rate bursts
    with pauses), which is the non-stationarity IVA exploits.
    """
    rng = rng_stream(seed, _STREAM_SOURCES)
    out = np.zeros((n_sources, n_samples))
    t = np.arange(n_samples) / sample_rate
    for s in range(n_sources):
        carrier = rng.laplace(size=n_samples)
        # piecewise bursts: random on/off segments of 50-300 ms, smoothed
        env = np.zeros(n_samples)
        pos = 0
        while pos < n_samples:
            seg = int(rng.uniform(0.05, 0.3) * sample_rate)
            env[pos:pos + seg] = rng.uniform(0.0, 1.0) ** 2 if rng.uniform() < 0.75 else 0.02
            pos += seg
        kernel = np.hanning(int(0.02 * sample_rate) + 1)
        # centered smoothing, valid also when the kernel is longer than the signal
        half = kernel.size // 2
        env = np.convolve(env, kernel / kernel.sum())[half:half + n_samples]
        rate = rng.uniform(3.0, 6.0)
        env *= 0.6 + 0.4 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
        sig = carrier * env
        out[s] = sig / np.sqrt(np.mean(sig * sig))
    return out


def read_wav(path) -> Tuple[np.ndarray, int]:
    """Read a PCM16 or float32 WAV file as ``((channels, samples) float64, rate)``."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg or "not supported" in msg:
            raise Unsupported(f"{path}: {msg}") from exc
        raise ParseError(f"{path}: {msg}") from exc
    except (EOFError, OSError) as exc:
        raise ParseError(f"{path}: {exc}") from exc

    if data.dtype == np.int16:
        out = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        out = data.astype(np.float64)
    else:
        raise Unsupported(f"{path}: sample format {data.dtype} (only PCM16 and float32 are supported)")
    if out.size == 0:
        raise ParseError(f"{path}: file contains no samples")
    out = out.reshape(out.shape[0], -1).T
    return np.ascontiguousarray(out), int(rate)


def write_wav(path, waveform, sample_rate: int, fmt: str = "float32") -> int:
    """Write ``(channels, samples)`` data; returns the number of clipped samples (PCM16 only)."""
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] == 0:
        raise InvalidInput(f"cannot write waveform of shape {x.shape}")
    if fmt not in WAV_FORMATS:
        raise Unsupported(f"unknown WAV format {fmt!r}; choose from {WAV_FORMATS}")
    clipped = 0
    if fmt == "float32":
        data = x.T.astype(np.float32)
    else:
        over = np.abs(x) > 1.0
        clipped = int(np.count_nonzero(over))
        if clipped:
            log.warning("%s: %d samples clipped to full scale", path, clipped)
        # same 1/32768 step as read_wav; +1.0 saturates at 32767
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16).T
    wavfile.write(path, int(sample_rate), np.ascontiguousarray(data))
    return clipped
