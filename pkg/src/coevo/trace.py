"""Per-generation run records and their CSV form."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    """Shortest repr that round-trips; keeps CSV output byte-stable."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


@dataclass
class RunTrace:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    def append(self, row: dict):
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"trace row lacks {missing}")
        if self.rows and row["generation"] <= self.rows[-1]["generation"]:
            raise ValueError("generation index must increase")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def last(self) -> dict:
        return self.rows[-1]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(format_value(r[c]) for c in self.columns) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text
