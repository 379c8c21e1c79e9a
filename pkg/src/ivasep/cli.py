"""Command-line interface: ``ivasep {mix, separate, bench, eval}``.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure,
4 benchmark finished with some failed conditions.

Every command reads all of its inputs before it writes anything, and output
directories are assembled in a temporary sibling directory that is moved into
place only when the command has succeeded.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import config as config_mod
from . import metrics, mixsim, pipeline
from .config import RunConfig
from .errors import (
    ConfigError,
    FormatMismatch,
    InputTooShort,
    InvalidInput,
    IvasepError,
    MetricsUnavailable,
    ParseError,
    ShapeMismatch,
    Unsupported,
    UnsupportedChannelCount,
)

log = logging.getLogger("ivasep")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_PARTIAL = 4

SCENARIO_VERSION = 1
RESULTS_SCHEMA_VERSION = 1

VALIDATION_ERRORS = (
    ConfigError,
    InvalidInput,
    ShapeMismatch,
    InputTooShort,
    UnsupportedChannelCount,
    FormatMismatch,
    ParseError,
    Unsupported,
    MetricsUnavailable,
)


class _OutputDir:
    """Stage files in a temporary directory and move them to ``target`` on commit."""

    def __init__(self, target):
        self.target = Path(target)

    def __enter__(self) -> Path:
        parent = self.target.resolve().parent
        parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}-", dir=parent))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self._commit()
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False

    def _commit(self) -> None:
        for src in sorted(p for p in self.tmp.rglob("*") if p.is_file()):
            dst = self.target / src.relative_to(self.tmp)
            dst.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dst)


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}-", dir=path.parent)
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --- configuration -----------------------------------------------------------


def _flag_overrides(args) -> Dict[str, Any]:
    out: Dict[str, Any] = {}

    def put(path, value):
        if value is None:
            return
        node = out
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value

    put(("algo",), args.algo)
    put(("iters",), args.iters)
    put(("hybrid", "gamma"), args.gamma)
    put(("seed",), args.seed)
    put(("stft", "fft_len"), args.fft_len)
    put(("stft", "hop"), args.hop)
    put(("mix", "snr_db"), args.snr_db)
    put(("ref_mic",), args.ref_mic)
    put(("io", "out"), args.out)
    if args.trace_metrics:
        put(("metrics", "trace_metrics"), True)
    if args.no_timing:
        put(("timing",), False)
    return out


def _load(args, extra: Optional[Dict[str, Any]] = None) -> RunConfig:
    overrides = _flag_overrides(args)
    if extra:
        overrides = config_mod.merge(extra, overrides)
    return config_mod.load_config(args.config, overrides)


# --- mixture generation ------------------------------------------------------


def _read_sources(paths: Sequence[str]):
    signals, rates = [], []
    for p in paths:
        data, fs = mixsim.read_wav(p)
        if data.shape[0] != 1:
            raise InvalidInput(f"{p}: source files must be mono, got {data.shape[0]} channels")
        signals.append(data[0])
        rates.append(fs)
    if len(set(rates)) > 1:
        raise FormatMismatch(f"sources have different sample rates: {sorted(set(rates))}")
    n = min(s.size for s in signals)
    if any(s.size != n for s in signals):
        log.info("trimming sources to the shortest length (%d samples)", n)
    return np.stack([s[:n] for s in signals]), rates[0]


def build_scenario(cfg: RunConfig, source_paths: Sequence[str] = (), n_sources: int = 2) -> Dict[str, Any]:
    """Describe a mixture completely enough to regenerate it bit for bit."""
    sample_rate = cfg.stft.sample_rate
    if source_paths:
        _, sample_rate = _read_sources(source_paths)
        sources = {
            "kind": "files",
            "paths": [str(Path(p).resolve()) for p in source_paths],
            "sha256": [_sha256(p) for p in source_paths],
        }
    else:
        if n_sources < 2:
            raise InvalidInput("a mixture needs at least two sources")
        sources = {"kind": "synthetic", "n_sources": n_sources, "duration_s": cfg.mix.duration_s}
    return {
        "schema_version": SCENARIO_VERSION,
        "seed": cfg.seed,
        "snr_db": cfg.mix.snr_db,
        "sample_rate": sample_rate,
        "sources": sources,
        "rir": {
            "mode": cfg.mix.rir_mode,
            "length": cfg.mix.rir_length,
            "t60": cfg.mix.t60,
            "tail_gain": cfg.mix.tail_gain,
            "max_delay": cfg.mix.max_delay,
            "files": [str(Path(p).resolve()) for p in cfg.mix.rir_files],
        },
        "config": config_mod.to_dict(cfg),
    }


def realize_scenario(scenario: Dict[str, Any]):
    """Returns ``(sources (N, n), mixture (K, n), images (N, K, n), sample_rate)``."""
    if scenario.get("schema_version") != SCENARIO_VERSION:
        raise ParseError(f"unsupported scenario schema_version {scenario.get('schema_version')!r}")
    spec = scenario["sources"]
    fs = int(scenario["sample_rate"])
    if spec["kind"] == "files":
        for p, digest in zip(spec["paths"], spec["sha256"]):
            if _sha256(p) != digest:
                raise FormatMismatch(f"{p}: contents changed since the scenario was recorded")
        sources, file_fs = _read_sources(spec["paths"])
        if file_fs != fs:
            raise FormatMismatch(f"sources are sampled at {file_fs} Hz, scenario says {fs} Hz")
    elif spec["kind"] == "synthetic":
        n = int(round(float(spec["duration_s"]) * fs))
        sources = mixsim.speech_like_sources(int(spec["n_sources"]), n, fs, int(scenario["seed"]))
    else:
        raise ParseError(f"unknown source kind {spec['kind']!r}")

    rir = scenario["rir"]
    n_src = sources.shape[0]
    rir_spec = mixsim.RirSpec(
        mode=rir["mode"],
        n_mics=n_src,
        n_sources=n_src,
        length=int(rir["length"]),
        decay_t60=float(rir["t60"]),
        sample_rate=fs,
        max_delay=int(rir["max_delay"]),
        tail_gain=float(rir["tail_gain"]),
        seed=int(scenario["seed"]),
        paths=list(rir["files"]),
    )
    bank = mixsim.synth_rir(rir_spec)
    snr = float(scenario["snr_db"])
    mixture, images = mixsim.mix(mixsim.MixtureScenario(sources, bank, snr, int(scenario["seed"])))
    return sources, mixture, images, fs


def cmd_mix(args) -> int:
    cfg = _load(args)
    if args.replay:
        with open(args.replay) as fh:
            try:
                scenario = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.replay}: {exc}") from exc
        cfg_out = args.out or scenario.get("config", {}).get("io", {}).get("out", cfg.io.out)
    else:
        scenario = build_scenario(cfg, args.sources or cfg.io.sources, args.n_sources)
        cfg_out = cfg.io.out
    _, mixture, images, fs = realize_scenario(scenario)
    fmt = scenario.get("config", {}).get("io", {}).get("wav_format", cfg.io.wav_format)

    with _OutputDir(cfg_out) as tmp:
        mixsim.write_wav(tmp / "mixture.wav", mixture, fs, fmt)
        (tmp / "images").mkdir()
        for i, img in enumerate(images):
            mixsim.write_wav(tmp / "images" / f"source_{i}.wav", img, fs, fmt)
        (tmp / "scenario.json").write_text(json.dumps(scenario, indent=2, sort_keys=True) + "\n")
    print(f"wrote {cfg_out}: {mixture.shape[0]}-channel mixture, {images.shape[0]} source images")
    return EXIT_OK


# --- separation --------------------------------------------------------------


def _read_channels(paths: Sequence[str], ref_mic: int, sample_rate: int) -> np.ndarray:
    """One signal per file: mono files as is, multichannel files at ``ref_mic``; trimmed to equal length."""
    refs = []
    for p in paths:
        data, fs = mixsim.read_wav(p)
        if fs != sample_rate:
            raise FormatMismatch(f"{p}: sample rate {fs} != {sample_rate}")
        if data.shape[0] == 1:
            refs.append(data[0])
        elif ref_mic < data.shape[0]:
            refs.append(data[ref_mic])
        else:
            raise UnsupportedChannelCount(f"{p}: no channel {ref_mic}")
    n = min(r.size for r in refs)
    return np.stack([r[:n] for r in refs])


def cmd_separate(args) -> int:
    cfg = _load(args)
    mixture_path = args.mixture or cfg.io.mixture
    if not mixture_path:
        raise ConfigError("no mixture given (positional argument or io.mixture)")
    mixture, fs = mixsim.read_wav(mixture_path)
    if fs != cfg.stft.sample_rate:
        raise FormatMismatch(f"{mixture_path}: sample rate {fs} != configured {cfg.stft.sample_rate}")
    ref_paths = args.references or cfg.io.references
    references = _read_channels(ref_paths, cfg.ref_mic, fs) if ref_paths else None

    result = pipeline.separate(mixture, cfg, references=references)

    summary = None
    if references is not None:
        imp = metrics.improvement(mixture[cfg.ref_mic], result.stems, references, cfg.metrics.metrics_config())
        summary = {
            "sdr": imp.result.sdr.tolist(),
            "sir": imp.result.sir.tolist(),
            "sar": imp.result.sar.tolist(),
            "delta_sdr": imp.delta_sdr.tolist(),
            "delta_sir": imp.delta_sir.tolist(),
            "delta_sar": imp.delta_sar.tolist(),
            "permutation": imp.result.permutation.tolist(),
        }

    with _OutputDir(cfg.io.out) as tmp:
        (tmp / "stems").mkdir()
        for k, stem in enumerate(result.stems):
            mixsim.write_wav(tmp / "stems" / f"stem_{k}.wav", stem, fs, cfg.io.wav_format)
        (tmp / "trace.csv").write_text(result.trace.to_csv())
        (tmp / "trace.jsonl").write_text(result.trace.to_jsonl())
        (tmp / "config.yaml").write_text(config_mod.dump_config(cfg))
        if summary is not None:
            (tmp / "metrics.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    switch = f", switched at iteration {result.switch_iter}" if result.switch_iter is not None else ""
    print(f"wrote {cfg.io.out}: {len(result.stems)} stems, {len(result.trace)} iterations{switch}")
    if summary is not None:
        print("delta SIR per source: " + ", ".join(f"{v:.2f}" for v in summary["delta_sir"]))
    return EXIT_OK


# --- evaluation --------------------------------------------------------------


def cmd_eval(args) -> int:
    cfg = _load(args)
    if not args.estimates or not args.references:
        raise ConfigError("eval needs --estimates and --references")
    _, fs = mixsim.read_wav(args.references[0])
    est = list(_read_channels(args.estimates, cfg.ref_mic, fs))
    refs = _read_channels(args.references, cfg.ref_mic, fs)
    mcfg = cfg.metrics.metrics_config()
    n = min(min(e.size for e in est), refs.shape[1])
    est = np.stack([e[:n] for e in est])
    refs = refs[:, :n]
    evaluator = metrics.BssEvaluator(refs, mcfg)
    res = evaluator.evaluate(est)
    out = {
        "sdr": res.sdr.tolist(),
        "sir": res.sir.tolist(),
        "sar": res.sar.tolist(),
        "permutation": res.permutation.tolist(),
    }
    if args.mixture:
        mix, rate = mixsim.read_wav(args.mixture)
        if rate != fs:
            raise FormatMismatch(f"{args.mixture}: sample rate {rate} != {fs}")
        if cfg.ref_mic >= mix.shape[0]:
            raise UnsupportedChannelCount(f"{args.mixture}: no channel {cfg.ref_mic}")
        at_ref = np.zeros(n)
        m = min(n, mix.shape[1])
        at_ref[:m] = mix[cfg.ref_mic, :m]
        imp = metrics.improvement(at_ref, est, refs, mcfg, evaluator=evaluator)
        out.update(
            delta_sdr=imp.delta_sdr.tolist(), delta_sir=imp.delta_sir.tolist(), delta_sar=imp.delta_sar.tolist()
        )
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        with _OutputDir(args.out) as tmp:
            (tmp / "metrics.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


# --- benchmark ---------------------------------------------------------------

MATRIX_KEYS = {"base", "algos", "seeds", "scenarios"}
RESULT_COLUMNS = [
    "scenario",
    "algo",
    "seed",
    "iter",
    "step_algo",
    "delta_sdr",
    "delta_sir",
    "delta_sar",
    "iva_cost",
    "matrix_change",
    "wall_time_ns",
]


def load_matrix(path, flag_overrides: Dict[str, Any], config_path=None) -> List[Dict[str, Any]]:
    """Expand a benchmark matrix into condition dicts, validating every config up front."""
    doc = config_mod.load_document(path)
    unknown = sorted(set(doc) - MATRIX_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")
    base = config_mod.load_document(config_path) if config_path else {}
    base = config_mod.merge(base, doc.get("base") or {})
    base = config_mod.merge(base, flag_overrides)
    algos = doc.get("algos") or [config_mod.from_dict(RunConfig, base).algo]
    seeds = doc.get("seeds") or [0]
    scenarios = doc.get("scenarios") or [{"name": "default"}]
    if not isinstance(algos, list) or not isinstance(seeds, list) or not isinstance(scenarios, list):
        raise ConfigError(f"{path}: algos, seeds and scenarios must be lists")

    conditions = []
    names = set()
    for sc in scenarios:
        if not isinstance(sc, dict) or "name" not in sc or set(sc) - {"name", "overrides"}:
            raise ConfigError(f"{path}: each scenario needs a name and optional overrides")
        if sc["name"] in names:
            raise ConfigError(f"{path}: duplicate scenario name {sc['name']!r}")
        names.add(sc["name"])
        for algo in algos:
            for seed in seeds:
                doc_c = config_mod.merge(base, sc.get("overrides") or {})
                doc_c = config_mod.merge(doc_c, {"algo": algo, "seed": seed})
                cfg = config_mod.from_dict(RunConfig, doc_c)
                conditions.append({"scenario": sc["name"], "algo": algo, "seed": seed, "config": config_mod.to_dict(cfg)})
    return conditions


def run_condition(cond: Dict[str, Any], cond_dir: Optional[str] = None) -> Dict[str, Any]:
    """Generate the condition's mixture, separate it with per-iteration metrics, return long-format rows."""
    cfg = config_mod.from_dict(RunConfig, cond["config"])
    try:
        scenario = build_scenario(cfg, cfg.io.sources)
        _, mixture, images, _ = realize_scenario(scenario)
        refs = images[:, cfg.ref_mic]
        evaluator = metrics.BssEvaluator(refs, cfg.metrics.metrics_config())
        baseline = evaluator.evaluate_fixed(mixture[cfg.ref_mic])
        run_cfg = config_mod.from_dict(
            RunConfig, config_mod.merge(cond["config"], {"metrics": {"trace_metrics": True}})
        )
        result = pipeline.separate(mixture, run_cfg, references=refs)
    except Exception as exc:  # one broken condition must not stop the matrix
        log.debug("condition failed", exc_info=True)
        return {"condition": cond, "error": f"{type(exc).__name__}: {exc}", "rows": []}

    rows = []
    for rec in result.trace:
        d = [np.asarray(v) - base for v, base in zip((rec.sdr, rec.sir, rec.sar), baseline)]
        rows.append(
            {
                "scenario": cond["scenario"],
                "algo": cond["algo"],
                "seed": cond["seed"],
                "iter": rec.iter,
                "step_algo": rec.algo,
                "delta_sdr": float(np.mean(d[0])),
                "delta_sir": float(np.mean(d[1])),
                "delta_sar": float(np.mean(d[2])),
                "iva_cost": rec.iva_cost,
                "matrix_change": rec.matrix_change,
                "wall_time_ns": rec.wall_time_ns,
            }
        )
    if cond_dir is not None:
        out = Path(cond_dir)
        _write_text_atomic(out / "trace.csv", result.trace.to_csv())
        _write_text_atomic(out / "config.yaml", yaml.safe_dump(cond["config"], sort_keys=True))
    return {"condition": cond, "error": None, "rows": rows, "switch_iter": result.switch_iter}


def _condition_dirname(cond: Dict[str, Any]) -> str:
    return f"{cond['scenario']}__{cond['algo']}__seed{cond['seed']}"


def results_csv(rows: List[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={RESULTS_SCHEMA_VERSION}\n")
    writer = csv.DictWriter(buf, RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def summarize(rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    """Median metric gains per (algo, iter) and median wall time per iteration per algorithm."""
    by_iter: Dict[tuple, List[Dict[str, Any]]] = {}
    wall: Dict[str, List[int]] = {}
    for r in rows:
        by_iter.setdefault((r["algo"], r["iter"]), []).append(r)
        wall.setdefault(r["step_algo"], []).append(r["wall_time_ns"])
    curves = []
    for (algo, it), group in sorted(by_iter.items()):
        curves.append(
            {
                "algo": algo,
                "iter": it,
                "n": len(group),
                "median_delta_sdr": float(np.median([g["delta_sdr"] for g in group])),
                "median_delta_sir": float(np.median([g["delta_sir"] for g in group])),
                "median_delta_sar": float(np.median([g["delta_sar"] for g in group])),
            }
        )
    median_wall = {k: float(np.median(v)) for k, v in sorted(wall.items())}
    ratio = None
    if median_wall.get("auxiva") and "fasteriva" in median_wall:
        ratio = median_wall["fasteriva"] / median_wall["auxiva"]
    return {"curves": curves, "median_wall_time_ns": median_wall, "runtime_ratio_fasteriva_auxiva": ratio}


def cmd_bench(args) -> int:
    conditions = load_matrix(args.matrix, _flag_overrides(args), args.config)
    out = Path(args.out or config_mod.from_dict(RunConfig, conditions[0]["config"]).io.out)
    jobs = max(1, args.jobs)
    cond_root = out / "conditions"
    dirs = [str(cond_root / _condition_dirname(c)) for c in conditions]
    log.info("bench: %d conditions, %d jobs", len(conditions), jobs)

    if jobs == 1:
        outcomes = [run_condition(c, d) for c, d in zip(conditions, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_condition, conditions, dirs))

    rows: List[Dict[str, Any]] = []
    failures = []
    for o in outcomes:
        if o["error"] is not None:
            log.error("condition %s failed: %s", _condition_dirname(o["condition"]), o["error"])
            failures.append({"condition": _condition_dirname(o["condition"]), "error": o["error"]})
        rows.extend(o["rows"])

    summary = summarize(rows)
    summary["n_conditions"] = len(conditions)
    summary["failures"] = failures
    curve_buf = io.StringIO()
    writer = csv.DictWriter(
        curve_buf,
        ["algo", "iter", "n", "median_delta_sdr", "median_delta_sir", "median_delta_sar"],
        lineterminator="\n",
    )
    writer.writeheader()
    writer.writerows(summary["curves"])

    _write_text_atomic(out / "results.csv", results_csv(rows))
    _write_text_atomic(out / "summary.csv", curve_buf.getvalue())
    _write_text_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")

    ratio = summary["runtime_ratio_fasteriva_auxiva"]
    print(f"bench: {len(conditions) - len(failures)}/{len(conditions)} conditions ok, {len(rows)} rows -> {out}")
    if ratio is not None:
        print(f"runtime ratio fasteriva/auxiva: {ratio:.3f}")
    if failures:
        print(f"{len(failures)} condition(s) failed, see {out / 'summary.json'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- entry point -------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--algo", choices=config_mod.ALGORITHMS)
    p.add_argument("--iters", type=int)
    p.add_argument("--gamma", type=float, help="hybrid switching threshold")
    p.add_argument("--seed", type=int)
    p.add_argument("--fft-len", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--ref-mic", type=int)
    p.add_argument("--trace-metrics", action="store_true", help="score every iteration (needs references)")
    p.add_argument("--no-timing", action="store_true", help="write zero wall times for byte-stable traces")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivasep", description="Independent vector analysis source separation")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="simulate a convolutive mixture")
    _common(p)
    p.add_argument("sources", nargs="*", help="mono source WAVs (synthetic sources if omitted)")
    p.add_argument("--n-sources", type=int, default=2, help="number of synthetic sources")
    p.add_argument("--replay", help="regenerate the mixture described by a scenario.json")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("separate", help="separate a multichannel mixture")
    _common(p)
    p.add_argument("mixture", nargs="?", help="mixture WAV")
    p.add_argument("--references", nargs="+", help="source images (for metrics)")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("bench", help="run an algorithm x seed x scenario matrix")
    _common(p)
    p.add_argument("matrix", help="YAML benchmark matrix")
    p.add_argument("--jobs", type=int, default=1, help="conditions run in parallel")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="BSS-Eval metrics for existing files")
    _common(p)
    p.add_argument("--estimates", nargs="+")
    p.add_argument("--references", nargs="+")
    p.add_argument("--mixture", help="mixture WAV, to report improvements")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc.filename or exc}: file not found", file=sys.stderr)
        return EXIT_VALIDATION
    except IvasepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
