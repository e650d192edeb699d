"""Tabular experiment reports with CSV and JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1


def _cell(x):
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return _cell(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


@dataclass
class ExperimentReport:
    experiment: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    passed: bool | None = None

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(self.columns)}")
        self.rows.append([v.item() if hasattr(v, "item") else v for v in row])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def to_dict(self) -> dict:
        from . import __version__
        prov = {"version": __version__, **self.provenance}
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "parameters": self.parameters,
            "columns": self.columns,
            "rows": self.rows,
            "provenance": prov,
            "passed": self.passed,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def write(self, outdir, stamp: str | None = None) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stamp = stamp or time.strftime("%Y%m%dT%H%M%S")
        base = outdir / f"{self.experiment}-{stamp}"
        csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
        csv_path.write_text(self.to_csv(), encoding="utf-8", newline="\n")
        json_path.write_text(self.to_json() + "\n", encoding="utf-8", newline="\n")
        return csv_path, json_path

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {d.get('schema_version')}")
        return cls(d["experiment"], list(d["columns"]), [list(r) for r in d["rows"]],
                   d.get("parameters", {}), d.get("provenance", {}), d.get("passed"))
