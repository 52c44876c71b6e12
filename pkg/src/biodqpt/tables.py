"""CSV tables with a ``#``-prefixed metadata header."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class SeriesTable:
    name: str
    columns: list[str]
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.size == 0:
            rows = rows.reshape(0, len(self.columns))
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ValueError(f"{self.name}: rows must have {len(self.columns)} columns")
        finite = np.all(np.isfinite(rows), axis=1)
        self.metadata = dict(self.metadata, dropped_rows=int(np.count_nonzero(~finite)))
        self.rows = rows[finite]

    @classmethod
    def from_columns(cls, name, data: dict, metadata=None):
        columns = list(data)
        rows = np.column_stack([np.asarray(data[c], dtype=float) for c in columns]) if columns else []
        return cls(name, columns, rows, metadata or {})

    def column(self, name) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        lines = [f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}" for key in sorted(self.metadata)]
        lines.append(",".join(self.columns))
        lines.extend(",".join(f"{x:.16g}" for x in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def write(self, directory) -> Path:
        path = Path(directory) / f"{self.name}.csv"
        path.write_text(self.to_csv())
        return path


def read_csv(path) -> SeriesTable:
    """Inverse of :meth:`SeriesTable.write` (metadata values are JSON-decoded)."""
    metadata, columns, rows = {}, None, []
    name = Path(path).stem
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            metadata[key] = json.loads(value)
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    dropped = metadata.pop("dropped_rows", 0)
    table = SeriesTable(name, columns, np.array(rows, dtype=float).reshape(-1, len(columns)), metadata)
    table.metadata["dropped_rows"] = dropped
    return table
