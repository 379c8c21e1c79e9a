"""Per-iteration convergence records and their CSV / JSON-lines serialization."""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

SCHEMA_VERSION = 1
BASE_COLUMNS = ("iter", "algo", "surrogate_cost", "iva_cost", "matrix_change")


@dataclass
class TraceRecord:
    iter: int
    algo: str
    surrogate_cost: float
    iva_cost: float
    matrix_change: float
    wall_time_ns: int = 0
    sdr: Optional[List[float]] = None
    sir: Optional[List[float]] = None
    sar: Optional[List[float]] = None
    extra: Dict[str, object] = field(default_factory=dict)


class ConvergenceTrace:
    """Ordered list of :class:`TraceRecord` with strictly increasing ``iter``."""

    def __init__(self, records: Optional[List[TraceRecord]] = None):
        self.records: List[TraceRecord] = []
        for rec in records or []:
            self.append(rec)

    def append(self, rec: TraceRecord) -> None:
        if self.records and rec.iter <= self.records[-1].iter:
            raise ValueError(f"iteration {rec.iter} does not follow {self.records[-1].iter}")
        self.records.append(rec)

    def extend(self, other: "ConvergenceTrace") -> None:
        for rec in other:
            self.append(rec)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]

    @property
    def algorithms(self) -> List[str]:
        tags: List[str] = []
        for r in self.records:
            if not tags or tags[-1] != r.algo:
                tags.append(r.algo)
        return tags

    def n_sources(self) -> int:
        for r in self.records:
            if r.sdr is not None:
                return len(r.sdr)
        return 0

    def csv_columns(self) -> List[str]:
        k = self.n_sources()
        cols = list(BASE_COLUMNS)
        for name in ("sdr", "sir", "sar"):
            cols += [f"{name}_{i}" for i in range(k)]
        cols.append("wall_time_ns")
        return cols

    def to_csv(self) -> str:
        """CSV text; the first line is a ``# schema_version=N`` comment."""
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.csv_columns())
        k = self.n_sources()
        for r in self.records:
            row = [r.iter, r.algo, repr(r.surrogate_cost), repr(r.iva_cost), repr(r.matrix_change)]
            for values in (r.sdr, r.sir, r.sar):
                row += [repr(float(v)) for v in values] if values is not None else [""] * k
            row.append(r.wall_time_ns)
            writer.writerow(row)
        return buf.getvalue()

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            obj = {"schema_version": SCHEMA_VERSION}
            obj.update(asdict(r))
            lines.append(json.dumps(obj, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "ConvergenceTrace":
        out = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            obj.pop("schema_version", None)
            out.append(TraceRecord(**obj))
        return out
