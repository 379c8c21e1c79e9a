"""End-to-end separation: STFT, whitening, demixing, backprojection, inverse STFT.

The hybrid controller runs FasterIVA until the mean squared change of the
demixing matrices drops below ``gamma`` and then hands the current state to
AuxIVA in the same whitened coordinates.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import aux_iva, faster_iva, stft, whitening
from .config import HybridConfig, RunConfig
from .errors import IvasepError, MetricsUnavailable, UnsupportedChannelCount
from .faster_iva import demix, matrix_change
from .metrics import BssEvaluator, BssEvalResult, MetricsConfig, bss_eval
from .source_model import ContrastModel
from .trace import ConvergenceTrace, TraceRecord

log = logging.getLogger(__name__)


def switch_check(prev, cur, gamma: float) -> bool:
    """True iff the mean squared demixing change is strictly below ``gamma``."""
    return matrix_change(prev, cur) < gamma


def backprojection_gains(w, q, ref_mic: int = 0):
    """Per-bin gains ``A_f[ref_mic, k]`` with ``A_f = (W_f Q_f)^{-1}``.

    Returns ``(gains (F, K), singular (F,))``; singular bins get unit gains.
    """
    w = np.asarray(w, dtype=np.complex128)
    n_bins, k, _ = w.shape
    if not 0 <= ref_mic < k:
        raise UnsupportedChannelCount(f"ref_mic {ref_mic} out of range for {k} channels", stage="backprojection")
    d = w if q is None else w @ np.asarray(q)
    cond = np.linalg.cond(d)
    singular = ~np.isfinite(cond) | (cond > 1e12)
    gains = np.ones((n_bins, k), dtype=np.complex128)
    ok = ~singular
    if ok.any():
        gains[ok] = np.linalg.inv(d[ok])[:, ref_mic, :]
    return gains, singular


def backproject(w, q, y, ref_mic: int = 0) -> np.ndarray:
    """Scale each separated channel to its image at ``ref_mic``.

    ``q`` is the whitening matrices ``(F, K, K)``, a :class:`WhiteningTransform`,
    or ``None`` when ``w`` acts on raw observations.
    """
    if isinstance(q, whitening.WhiteningTransform):
        q = q.q
    gains, singular = backprojection_gains(w, q, ref_mic)
    if singular.any():
        log.warning("backprojection: %d singular bins left unscaled: %s", singular.sum(), np.nonzero(singular)[0][:10])
    return np.asarray(y) * gains[:, None, :]


def evaluate_iteration_metrics(stems, references, cfg: MetricsConfig = MetricsConfig()) -> BssEvalResult:
    if references is None:
        raise MetricsUnavailable("per-iteration metrics need reference signals", stage="metrics")
    return bss_eval(stems, references, cfg)


def run_hybrid(
    xw,
    model: ContrastModel,
    hybrid: HybridConfig,
    iters: int,
    init=None,
    workers: Optional[int] = None,
    callback: Optional[Callable] = None,
):
    """FasterIVA until the switching statistic falls below ``gamma``, then AuxIVA.

    ``iters`` is the total iteration budget across both phases.
    Returns ``(W, trace, switch_iter)``; ``switch_iter`` is the last FasterIVA
    iteration.
    """
    faster_limit = min(iters, hybrid.max_faster_iters or iters)
    w, trace = faster_iva.run(
        xw, model, faster_limit, init=init, tol=hybrid.gamma, workers=workers, callback=callback
    )
    switch_iter = len(trace)
    remaining = iters - switch_iter
    if hybrid.max_aux_iters is not None:
        remaining = min(remaining, hybrid.max_aux_iters)
    if remaining > 0:
        w, aux_trace = aux_iva.run(
            xw, model, remaining, init=w, workers=workers, callback=callback, start_iter=switch_iter + 1
        )
        trace.extend(aux_trace)
    return w, trace, switch_iter


@dataclass
class SeparationResult:
    stems: np.ndarray  # (K, n_samples), channel k scaled to its image at ref_mic
    trace: ConvergenceTrace
    demixing: np.ndarray  # (F, K, K), acting on the coordinates given by ``whitening``
    whitening: Optional[whitening.WhiteningTransform]
    spectrogram: np.ndarray  # backprojected (F, T, K)
    switch_iter: Optional[int] = None


def separate(mixture, cfg: RunConfig, references=None, workers: Optional[int] = None) -> SeparationResult:
    """Separate a ``(K, n_samples)`` mixture according to ``cfg``.

    When ``cfg.metrics.trace_metrics`` is set and ``references`` (source
    images at ``ref_mic``, ``(K, n_samples)``) are given, every trace record
    carries SDR/SIR/SAR of the backprojected output at that iteration.
    """
    x = np.asarray(mixture, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise UnsupportedChannelCount(
            f"separation needs at least 2 channels, got shape {x.shape}", stage="input"
        )
    k, n_samples = x.shape
    if cfg.ref_mic >= k:
        raise UnsupportedChannelCount(f"ref_mic {cfg.ref_mic} out of range for {k} channels", stage="input")

    try:
        spec = stft.analyze(x, cfg.stft)
    except IvasepError as exc:
        raise exc.with_context(stage="stft")

    if cfg.algo == "auxiva":
        wt = None
        data = spec
    else:
        try:
            wt = whitening.fit(spec)
        except IvasepError as exc:
            raise exc.with_context(stage="whitening")
        data = whitening.apply(wt, spec)
    q = None if wt is None else wt.q

    n_bins = spec.shape[0]
    if cfg.init == "random":
        init = faster_iva.random_unitary_init(n_bins, k, cfg.seed)
    else:
        init = faster_iva.identity_init(n_bins, k)

    callback = None
    if cfg.metrics.trace_metrics:
        if references is None:
            raise MetricsUnavailable("trace_metrics requested without reference signals", stage="metrics")
        refs = np.atleast_2d(np.asarray(references, dtype=np.float64))
        n_eval = min(n_samples, refs.shape[1])
        evaluator = BssEvaluator(refs[:, :n_eval], cfg.metrics.metrics_config())

        def callback(_, w, __, rec: TraceRecord):
            y = backproject(w, q, demix(w, data), cfg.ref_mic)
            res = evaluator.evaluate(stft.synthesize(y, cfg.stft, length=n_samples)[:, :n_eval])
            rec.sdr, rec.sir, rec.sar = res.sdr.tolist(), res.sir.tolist(), res.sar.tolist()

    model = cfg.model
    switch_iter = None
    try:
        if cfg.algo == "fasteriva":
            w, trace = faster_iva.run(data, model, cfg.iters, init=init, workers=workers, callback=callback)
        elif cfg.algo == "auxiva":
            w, trace = aux_iva.run(data, model, cfg.iters, init=init, workers=workers, callback=callback)
        else:
            w, trace, switch_iter = run_hybrid(
                data, model, cfg.hybrid, cfg.iters, init=init, workers=workers, callback=callback
            )
    except IvasepError as exc:
        raise exc.with_context(stage=cfg.algo)

    if not cfg.timing:
        for rec in trace:
            rec.wall_time_ns = 0

    y = backproject(w, q, demix(w, data), cfg.ref_mic)
    stems = stft.synthesize(y, cfg.stft, length=n_samples)
    return SeparationResult(stems, trace, w, wt, y, switch_iter)

