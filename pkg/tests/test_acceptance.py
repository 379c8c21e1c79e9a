"""Acceptance suite: twelve end-to-end checks, each printing one PASS/FAIL line.

Run under pytest (lines are repeated in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import functools
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_hermitian, svd_polar, unitarity_error  # noqa: E402

from ivasep import cli, faster_iva, linalg, metrics, mixsim, pipeline, stft, whitening  # noqa: E402
from ivasep.config import load_config  # noqa: E402
from ivasep.metrics import BssEvaluator, MetricsConfig, bss_eval  # noqa: E402
from ivasep.source_model import ContrastModel  # noqa: E402

LAPLACE = ContrastModel()
RESULTS = []

CONV_SEEDS = list(range(10))
CONV_ITERS = 50
FS = 16000


def report(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# --- shared data -------------------------------------------------------------


def laplacian_vector_sources(rng, f, t, k):
    # spherically symmetric across bins: a common per-frame scale drives every bin
    scale = np.sqrt(rng.exponential(1.0, (1, t, k)))
    return scale * (rng.standard_normal((f, t, k)) + 1j * rng.standard_normal((f, t, k))) / np.sqrt(2)


@functools.lru_cache(maxsize=None)
def property_runs():
    """200 random desk-scale FasterIVA runs; per iteration unitarity error and Rayleigh increase."""
    t0 = time.perf_counter()
    configs = [(k, f, t) for k in (2, 3) for f in (1, 33, 129) for t in (64, 256)]
    worst_unitary, worst_rayleigh = 0.0, -np.inf
    for run in range(200):
        k, f, t = configs[run % len(configs)]
        rng = np.random.default_rng(10_000 + run)
        s = laplacian_vector_sources(rng, f, t, k)
        a = rng.standard_normal((f, k, k)) + 1j * rng.standard_normal((f, k, k))
        x = s @ np.swapaxes(a, 1, 2)
        xw = whitening.apply(whitening.fit(x), x)
        w = faster_iva.identity_init(f, k) if run % 2 == 0 else faster_iva.random_unitary_init(f, k, run)
        for _ in range(10):
            w, _, stats = faster_iva.iterate(xw, w, LAPLACE)
            worst_unitary = max(worst_unitary, float(np.max(unitarity_error(w))))
            worst_rayleigh = max(worst_rayleigh, float(np.max(stats.rayleigh_new - stats.rayleigh_prev)))
    return worst_unitary, worst_rayleigh, time.perf_counter() - t0


def convolutive_mixture(seed):
    src = mixsim.speech_like_sources(2, 10 * FS, FS, seed)
    bank = mixsim.synth_rir(mixsim.RirSpec(n_mics=2, n_sources=2, decay_t60=0.2, sample_rate=FS, seed=seed))
    return mixsim.mix(mixsim.MixtureScenario(src, bank, snr_db=30.0, seed=seed))


@functools.lru_cache(maxsize=None)
def convolutive_runs():
    """Every algorithm on every seed of the desk-scale convolutive scenario."""
    t0 = time.perf_counter()
    out = []
    for seed in CONV_SEEDS:
        mixture, images = convolutive_mixture(seed)
        refs = images[:, 0]
        evaluator = BssEvaluator(refs)
        entry = {"seed": seed, "mixture": mixture}
        for algo in ("fasteriva", "auxiva", "hybrid"):
            cfg = load_config(overrides={"algo": algo, "iters": CONV_ITERS, "seed": seed})
            res = pipeline.separate(mixture, cfg)
            imp = metrics.improvement(mixture[0], res.stems, refs, evaluator=evaluator)
            entry[algo] = {"trace": res.trace, "delta_sir": float(np.mean(imp.delta_sir)), "switch": res.switch_iter}
        out.append(entry)
    return out, time.perf_counter() - t0


# --- criteria ----------------------------------------------------------------


def criterion_1():
    worst, _, elapsed = property_runs()
    ok = worst <= 1e-10 and elapsed < 60
    return report(1, ok, f"max ||W W^H - I||_F = {worst:.2e} (<= 1e-10) over 200 runs x 10 iters, {elapsed:.1f} s (< 60 s)")


def criterion_2():
    _, worst, _ = property_runs()
    ok = worst <= 1e-12
    return report(2, ok, f"max Rayleigh increase = {worst:.2e} (<= 1e-12) over the same 200 runs")


def criterion_3():
    rng = np.random.default_rng(3)
    worst_root = 0.0
    for _ in range(1000):
        m = random_hermitian(rng, 2)
        vals, _ = linalg.eigh(m)
        a, d, b = m[0, 0].real, m[1, 1].real, m[0, 1]
        disc = np.sqrt(0.25 * (a - d) ** 2 + abs(b) ** 2)
        roots = np.array([0.5 * (a + d) - disc, 0.5 * (a + d) + disc])
        worst_root = max(worst_root, float(np.max(np.abs(vals - roots))))
    worst_res = 0.0
    for i in range(1000):
        k = 2 + i % 7
        m = random_hermitian(rng, k)
        vals, vecs = linalg.eigh(m)
        worst_res = max(worst_res, float(np.linalg.norm((vecs * vals) @ vecs.conj().T - m) / np.linalg.norm(m)))
    ok = worst_root <= 1e-12 and worst_res <= 1e-10
    return report(3, ok, f"2x2 root error {worst_root:.2e} (<= 1e-12); K<=8 relative residual {worst_res:.2e} (<= 1e-10)")


def criterion_4():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(500):
        k = 2 + i % 7
        m = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        u, _ = linalg.polar_unitary(m)
        worst = max(worst, float(np.max(np.abs(u - svd_polar(m)))))
    # the same projection as used inside the update step
    v = np.stack([random_hermitian(rng, 3, psd=True) for _ in range(3)])
    w_tilde, w, _ = faster_iva.update_bin(v)
    worst = max(worst, float(np.max(np.abs(w - svd_polar(w_tilde)))))
    return report(4, worst <= 1e-10, f"max |polar - SVD oracle| = {worst:.2e} (<= 1e-10) on 500 matrices")


def criterion_5():
    t0 = time.perf_counter()
    medians = {}
    for k in (2, 3):
        gains = []
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            # circular Laplacian: density proportional to exp(-|s|)
            s = rng.gamma(2.0, 1.0, (1, 2000, k)) * np.exp(2j * np.pi * rng.uniform(size=(1, 2000, k)))
            q, r = np.linalg.qr(rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))
            a = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
            x = s @ a.T[None]
            wt = whitening.fit(x)
            w, _ = faster_iva.run(whitening.apply(wt, x), LAPLACE, 20)
            powers = np.mean(np.abs(s[0]) ** 2, axis=0)
            out_sir = metrics.instantaneous_sir(w[0] @ wt.q[0] @ a, powers)
            in_sir = metrics.mixture_sir(a[0], powers)
            gains.append(float(np.mean(out_sir - in_sir)))
        medians[k] = float(np.median(gains))
    elapsed = time.perf_counter() - t0
    ok = min(medians.values()) >= 20 and elapsed < 30
    return report(
        5, ok, f"median dSIR K=2 {medians[2]:.1f} dB, K=3 {medians[3]:.1f} dB (>= 20) over 20 seeds, {elapsed:.1f} s (< 30 s)"
    )


def criterion_6():
    runs, elapsed = convolutive_runs()
    med = {algo: float(np.median([r[algo]["delta_sir"] for r in runs])) for algo in ("fasteriva", "auxiva", "hybrid")}
    ok = (
        med["fasteriva"] >= 8
        and med["hybrid"] >= med["fasteriva"] - 0.5
        and med["hybrid"] >= med["auxiva"] - 1.0
        and elapsed < 300
    )
    detail = (
        f"median dSIR fasteriva {med['fasteriva']:.2f} (>= 8), hybrid {med['hybrid']:.2f}, auxiva {med['auxiva']:.2f} dB; "
        f"{len(runs)} seeds, {elapsed:.0f} s (< 300 s)"
    )
    return report(6, ok, detail)


def criterion_7():
    runs, _ = convolutive_runs()
    hits = 0
    for r in runs:
        change = r["fasteriva"]["trace"].column("matrix_change")
        first = next((i + 1 for i, c in enumerate(change) if c < 0.05), None)
        hits += first is not None and first <= 10
    frac = hits / len(runs)
    return report(7, frac >= 0.8, f"switching statistic < 0.05 within 10 iterations on {hits}/{len(runs)} seeds (>= 80 %)")


def criterion_8():
    runs, _ = convolutive_runs()
    worst = max(float(np.max(np.diff(r["auxiva"]["trace"].column("iva_cost")))) for r in runs)
    return report(8, worst <= 1e-8, f"largest AuxIVA cost increase {worst:.2e} (<= 1e-8) over {len(runs)} seeds")


def criterion_9():
    runs, _ = convolutive_runs()
    fast = np.median([ns for r in runs for ns in r["fasteriva"]["trace"].column("wall_time_ns")])
    aux = np.median([ns for r in runs for ns in r["auxiva"]["trace"].column("wall_time_ns")])
    ratio = float(fast / aux)
    return report(
        9, 0.5 <= ratio <= 3.0, f"per-iteration time fasteriva {fast / 1e6:.1f} ms / auxiva {aux / 1e6:.1f} ms = {ratio:.2f} (0.5-3)"
    )


def criterion_10():
    rng = np.random.default_rng(10)
    s1 = rng.standard_normal(8000)
    s2 = rng.standard_normal(8000)
    s2 -= s1 * np.dot(s1, s2) / np.dot(s1, s1)
    s2 *= np.linalg.norm(s1) / np.linalg.norm(s2)
    refs = np.stack([s1, s2])
    sir = bss_eval(np.stack([s1 + 0.1 * s2, s2]), refs, MetricsConfig(proj_filter_len=1)).sir[0]

    refs = rng.standard_normal((2, 4000))
    est = np.stack([refs[0] + 0.3 * refs[1] + 0.1 * rng.standard_normal(4000), refs[1] - 0.2 * refs[0]])
    ev = BssEvaluator(refs)
    dec = ev.decompose(est[0], 0)
    total = (dec.target + dec.interference + dec.artifact)[:4000]
    recon = float(np.sqrt(np.mean((total - est[0]) ** 2) / np.mean(est[0] ** 2)))
    a, b = ev.evaluate(est), ev.evaluate(-2.5 * est)
    scale = max(float(np.max(np.abs(x - y))) for x, y in zip(a[:3], b[:3]))
    ok = abs(sir - 20.0) <= 0.01 and recon <= 1e-8 and scale <= 1e-10
    return report(10, ok, f"SIR {sir:.4f} dB (20 +- 0.01), reconstruction {recon:.1e} (<= 1e-8), scale change {scale:.1e} (<= 1e-10)")


def criterion_11():
    runs, _ = convolutive_runs()
    worst, checked = 0.0, 0
    for r in runs:
        spec = stft.analyze(r["mixture"], stft.StftConfig())
        wt = whitening.fit(spec)
        cov = whitening.sample_covariance(whitening.apply(wt, spec))
        eig = np.linalg.eigvalsh(wt.cov)
        above = eig[:, 0] > linalg.EIG_FLOOR_RATIO * eig[:, -1]
        dev = np.linalg.norm(cov - np.eye(cov.shape[-1]), axis=(1, 2))[above]
        worst = max(worst, float(np.max(dev)))
        checked += int(above.sum())
    return report(11, worst <= 1e-6, f"max ||cov(Qx) - I||_F = {worst:.2e} (<= 1e-6) over {checked} bins")


def criterion_12(tmp_dir):
    mixture, _ = convolutive_mixture(CONV_SEEDS[0])
    wav = Path(tmp_dir) / "mixture.wav"
    mixsim.write_wav(wav, mixture, FS)
    traces = []

    saved = os.environ.get("IVASEP_WORKERS")
    try:
        for workers in ("1", "4"):
            os.environ["IVASEP_WORKERS"] = workers
            out = Path(tmp_dir) / f"w{workers}"
            code = cli.main(["separate", str(wav), "--iters", str(CONV_ITERS), "--no-timing", "--out", str(out)])
            traces.append((code, (out / "trace.csv").read_bytes() if code == 0 else b""))
    finally:
        if saved is None:
            os.environ.pop("IVASEP_WORKERS", None)
        else:
            os.environ["IVASEP_WORKERS"] = saved
    ok = all(c == 0 for c, _ in traces) and traces[0][1] == traces[1][1] and len(traces[0][1]) > 0
    return report(12, ok, f"trace.csv with 1 and 4 workers {'identical' if ok else 'DIFFERENT'} ({len(traces[0][1])} bytes)")


# --- pytest entry points -----------------------------------------------------


@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(number):
    assert globals()[f"criterion_{number}"]()


def test_criterion_12(tmp_path):
    assert criterion_12(tmp_path)


if __name__ == "__main__":
    import tempfile

    passed = [globals()[f"criterion_{n}"]() for n in range(1, 12)]
    with tempfile.TemporaryDirectory() as tmp:
        passed.append(criterion_12(tmp))
    print(f"{sum(passed)}/{len(passed)} criteria passed")
    sys.exit(0 if all(passed) else 1)
