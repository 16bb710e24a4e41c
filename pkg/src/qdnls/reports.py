"""Structured sweep output: rows of parameters and measured values, plus a manifest.

Every experiment serializes to a CSV with a stable header and a JSON
manifest that echoes the full resolved configuration (enough to re-run the
experiment bit-identically).  Row order is fixed by the caller, never by
completion time, so reports are byte-reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

__all__ = ["ExperimentReport", "format_value"]


def format_value(value) -> str:
    """Canonical CSV cell: shortest round-trip form for floats, plain text otherwise."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


@dataclass
class ExperimentReport:
    kind: str
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def add_row(self, **values) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"row fields {sorted(unknown)} not in columns {self.columns}")
        self.rows.append(values)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_value(row.get(col)) for col in self.columns])

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"kind": self.kind, **self.manifest}, fh, indent=2, sort_keys=True)
            fh.write("\n")
