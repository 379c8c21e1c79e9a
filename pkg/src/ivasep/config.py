"""Declarative run configuration.

A run is described by one YAML (or JSON) document whose keys mirror
:class:`RunConfig`. Unknown keys and wrongly typed values are rejected before
any computation starts.
"""

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError, IvasepError
from .metrics import MetricsConfig
from .source_model import ContrastModel
from .stft import StftConfig

ALGORITHMS = ("fasteriva", "auxiva", "hybrid")
INITS = ("identity", "random")


@dataclass(frozen=True)
class HybridConfig:
    gamma: float = 0.05
    # None means "no limit beyond the total iteration count"
    max_faster_iters: Optional[int] = None
    max_aux_iters: Optional[int] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("hybrid.gamma must be positive")
        for name in ("max_faster_iters", "max_aux_iters"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"hybrid.{name} must be >= 1")


@dataclass(frozen=True)
class MetricsSection:
    proj_filter_len: int = 512
    cap_db: float = 100.0
    trace_metrics: bool = False

    def metrics_config(self) -> MetricsConfig:
        return MetricsConfig(self.proj_filter_len, self.cap_db)


@dataclass(frozen=True)
class MixSection:
    snr_db: float = 30.0
    rir_mode: str = "synthetic_exponential"
    rir_length: int = 3200
    t60: float = 0.2
    tail_gain: float = 0.2
    max_delay: int = 8
    rir_files: List[str] = field(default_factory=list)
    duration_s: float = 10.0  # synthetic sources only


@dataclass(frozen=True)
class IoSection:
    sources: List[str] = field(default_factory=list)
    mixture: Optional[str] = None
    references: List[str] = field(default_factory=list)
    out: str = "out"
    wav_format: str = "float32"


@dataclass(frozen=True)
class RunConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    model: ContrastModel = field(default_factory=ContrastModel)
    algo: str = "hybrid"
    hybrid: HybridConfig = field(default_factory=HybridConfig)
    iters: int = 50
    seed: int = 0
    init: str = "identity"
    ref_mic: int = 0
    metrics: MetricsSection = field(default_factory=MetricsSection)
    mix: MixSection = field(default_factory=MixSection)
    io: IoSection = field(default_factory=IoSection)
    # wall-clock timing in traces; disable for byte-reproducible trace files
    timing: bool = True

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        if self.iters < 1:
            raise ConfigError("iters must be >= 1")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}")
        if self.ref_mic < 0:
            raise ConfigError("ref_mic must be >= 0")


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _convert(args[0], value, path)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        (inner,) = typing.get_args(tp) or (Any,)
        return [_convert(inner, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
        return from_dict(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def from_dict(cls, data: Dict[str, Any], path: str = ""):
    """Build dataclass ``cls`` from a nested mapping, rejecting unknown keys."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = path or "config"
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        kwargs[key] = _convert(hints[key], value, f"{path}.{key}" if path else key)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (IvasepError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def to_dict(cfg) -> Dict[str, Any]:
    out = dataclasses.asdict(cfg)

    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, float) and math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj

    return clean(out)


def merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def load_document(path) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_config(path=None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    data = load_document(path) if path else {}
    if overrides:
        data = merge(data, overrides)
    return from_dict(RunConfig, data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=True)
