"""BSS-Eval style SDR / SIR / SAR with time-invariant distortion filters.

An estimate ``e`` is split against references ``s_1..s_N`` (all zero-padded to
``n + L - 1`` samples, ``L = proj_filter_len``):

* target        ``P_j e``              projection onto the ``L`` shifts of ``s_j``
* interference  ``P_all e - P_j e``    rest of the projection onto all shifts of all refs
* artifact      ``e - P_all e``

Normal equations are solved with diagonal loading ``1e-10 * trace(Gram)``.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import fft as sfft
from scipy.linalg import cho_factor, cho_solve, toeplitz

from .errors import InvalidInput, MetricsUnavailable, MetricsUndefined

LOADING = 1e-10


@dataclass(frozen=True)
class MetricsConfig:
    proj_filter_len: int = 512
    cap_db: float = 100.0

    def __post_init__(self):
        if self.proj_filter_len < 1:
            raise InvalidInput("proj_filter_len must be >= 1")


class Decomposition(NamedTuple):
    target: np.ndarray
    interference: np.ndarray
    artifact: np.ndarray


class BssEvalResult(NamedTuple):
    """Metrics indexed by reference; ``permutation[j]`` is the estimate assigned to reference ``j``."""

    sdr: np.ndarray
    sir: np.ndarray
    sar: np.ndarray
    permutation: np.ndarray


def _db(num: float, den: float, cap: float) -> float:
    if den <= 0.0:
        return cap
    if num <= 0.0:
        return -cap
    return float(np.clip(10.0 * np.log10(num / den), -cap, cap))


class BssEvaluator:
    """Caches the reference Gram factorizations so many estimates can be scored cheaply."""

    def __init__(self, references, cfg: MetricsConfig = MetricsConfig()):
        refs = np.atleast_2d(np.asarray(references, dtype=np.float64))
        if refs.shape[0] < 1 or refs.shape[1] == 0:
            raise InvalidInput("need at least one non-empty reference")
        energy = np.sum(refs * refs, axis=1)
        if np.any(energy == 0.0):
            raise MetricsUndefined(f"reference {int(np.argmin(energy))} has zero energy")
        self.cfg = cfg
        self.refs = refs
        self.n_refs, self.n = refs.shape
        self.ext = self.n + cfg.proj_filter_len - 1
        self.nfft = sfft.next_fast_len(self.n + self.ext)
        self._ref_fft = sfft.rfft(refs, self.nfft, axis=1)
        self._all = self._factor(self._gram())
        self._single = [self._factor(self._gram_block(j, j)) for j in range(self.n_refs)]

    def _xcorr(self, a_fft, b_fft, lags: int) -> np.ndarray:
        # c[tau] = sum_u a[u] b[u + tau], tau = 0..lags-1
        c = sfft.irfft(a_fft.conj() * b_fft, self.nfft)
        return c[..., :lags]

    def _gram_block(self, j: int, l: int) -> np.ndarray:
        flen = self.cfg.proj_filter_len
        c_jl = self._xcorr(self._ref_fft[j], self._ref_fft[l], flen)  # c_jl[tau], tau >= 0
        c_lj = self._xcorr(self._ref_fft[l], self._ref_fft[j], flen)
        # block[a, b] = <s_j shifted a, s_l shifted b> = c_jl[a - b]; negative lags are c_lj[b - a]
        return toeplitz(c_jl, c_lj)

    def _gram(self) -> np.ndarray:
        flen = self.cfg.proj_filter_len
        g = np.zeros((self.n_refs * flen, self.n_refs * flen))
        for j in range(self.n_refs):
            for l in range(self.n_refs):
                g[j * flen:(j + 1) * flen, l * flen:(l + 1) * flen] = self._gram_block(j, l)
        return g

    @staticmethod
    def _factor(g: np.ndarray):
        g = g + LOADING * np.trace(g) * np.eye(g.shape[0])
        return cho_factor(g)

    def _project(self, e_fft, refs_idx, factor) -> np.ndarray:
        flen = self.cfg.proj_filter_len
        d = np.concatenate([self._xcorr(self._ref_fft[j], e_fft, flen) for j in refs_idx])
        coef = cho_solve(factor, d)
        out = np.zeros(self.ext)
        for i, j in enumerate(refs_idx):
            filt = coef[i * flen:(i + 1) * flen]
            out += sfft.irfft(self._ref_fft[j] * sfft.rfft(filt, self.nfft), self.nfft)[: self.ext]
        return out

    def _prepare(self, estimate) -> np.ndarray:
        e = np.asarray(estimate, dtype=np.float64)
        if e.ndim != 1:
            raise InvalidInput(f"estimate must be 1-D, got shape {e.shape}")
        e = e[: self.n]
        if e.size < self.n:
            e = np.pad(e, (0, self.n - e.size))
        if not np.any(e):
            raise MetricsUndefined("estimate has zero energy")
        return e

    def decompose(self, estimate, j: int) -> Decomposition:
        """Split ``estimate`` (zero-padded to ``n + L - 1``) with reference ``j`` as target."""
        e = self._prepare(estimate)
        e_fft = sfft.rfft(e, self.nfft)
        p_all = self._project(e_fft, range(self.n_refs), self._all)
        p_j = self._project(e_fft, [j], self._single[j])
        e_pad = np.zeros(self.ext)
        e_pad[: self.n] = e
        return Decomposition(p_j, p_all - p_j, e_pad - p_all)

    def _all_pairs(self, estimate) -> np.ndarray:
        """(3, N) array of sdr/sir/sar of one estimate against every reference."""
        e = self._prepare(estimate)
        e_fft = sfft.rfft(e, self.nfft)
        p_all = self._project(e_fft, range(self.n_refs), self._all)
        e_pad = np.zeros(self.ext)
        e_pad[: self.n] = e
        artif = e_pad - p_all
        cap = self.cfg.cap_db
        out = np.empty((3, self.n_refs))
        for j in range(self.n_refs):
            target = self._project(e_fft, [j], self._single[j])
            interf = p_all - target
            t2 = float(np.dot(target, target))
            i2 = float(np.dot(interf, interf))
            a2 = float(np.dot(artif, artif))
            ia = interf + artif
            ta = target + interf
            out[0, j] = _db(t2, float(np.dot(ia, ia)), cap)
            out[1, j] = _db(t2, i2, cap)
            out[2, j] = _db(float(np.dot(ta, ta)), a2, cap)
        return out

    def evaluate(self, estimates) -> BssEvalResult:
        est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
        if est.shape[0] < self.n_refs:
            raise InvalidInput(f"{est.shape[0]} estimates for {self.n_refs} references")
        table = np.stack([self._all_pairs(e) for e in est])  # (n_est, 3, N)
        best, best_score = None, -np.inf
        for perm in itertools.permutations(range(est.shape[0]), self.n_refs):
            score = sum(table[perm[j], 1, j] for j in range(self.n_refs))
            if score > best_score:
                best, best_score = perm, score
        perm = np.asarray(best)
        idx = np.arange(self.n_refs)
        return BssEvalResult(table[perm, 0, idx], table[perm, 1, idx], table[perm, 2, idx], perm)

    def evaluate_fixed(self, estimate) -> np.ndarray:
        """Metrics of a single estimate against each reference as target, ``(3, N)``."""
        return self._all_pairs(estimate)


def bss_eval(estimates, references, cfg: MetricsConfig = MetricsConfig()) -> BssEvalResult:
    """Score estimates ``(K, n)`` against references ``(N, n)``; lengths are trimmed to the shorter."""
    est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    refs = np.atleast_2d(np.asarray(references, dtype=np.float64))
    n = min(est.shape[1], refs.shape[1])
    return BssEvaluator(refs[:, :n], cfg).evaluate(est[:, :n])


class Improvement(NamedTuple):
    delta_sdr: np.ndarray
    delta_sir: np.ndarray
    delta_sar: np.ndarray
    result: BssEvalResult
    baseline: np.ndarray  # (3, N) metrics of the unprocessed mixture


def improvement(mixture_at_ref, stems, references, cfg: MetricsConfig = MetricsConfig(), evaluator=None) -> Improvement:
    """Per-source metric gain of ``stems`` over using the reference-mic mixture as every estimate."""
    if references is None:
        raise MetricsUnavailable("no reference signals available")
    if evaluator is None:
        stems = np.atleast_2d(np.asarray(stems, dtype=np.float64))
        refs = np.atleast_2d(np.asarray(references, dtype=np.float64))
        n = min(stems.shape[1], refs.shape[1], np.asarray(mixture_at_ref).shape[-1])
        evaluator = BssEvaluator(refs[:, :n], cfg)
    baseline = evaluator.evaluate_fixed(np.asarray(mixture_at_ref, dtype=np.float64))
    res = evaluator.evaluate(stems)
    return Improvement(res.sdr - baseline[0], res.sir - baseline[1], res.sar - baseline[2], res, baseline)


def instantaneous_sir(system, source_powers) -> np.ndarray:
    """Output SIRs (dB) of a global instantaneous system ``G = W Q A``.

    Outputs are matched to sources by the permutation maximizing total SIR;
    returned values are indexed by source.
    """
    g = np.asarray(system)
    p = np.asarray(source_powers, dtype=np.float64)
    k = g.shape[0]
    power = (g.real ** 2 + g.imag ** 2) * p[None, :]
    total = power.sum(axis=1)
    best, best_score = None, None
    # interference-free outputs give +inf
    with np.errstate(divide="ignore"):
        for perm in itertools.permutations(range(k)):
            idx = np.asarray(perm)
            own = power[idx, np.arange(k)]
            sirs = 10 * np.log10(own) - 10 * np.log10(total[idx] - own)
            if best is None or sirs.sum() > best_score:
                best, best_score = sirs, sirs.sum()
    return best


def mixture_sir(mixing_row, source_powers) -> np.ndarray:
    """Input SIR per source for one microphone with mixing gains ``mixing_row``."""
    a = np.asarray(mixing_row)
    p = np.asarray(source_powers, dtype=np.float64)
    power = (a.real ** 2 + a.imag ** 2) * p
    return 10 * np.log10(power / (power.sum() - power))
