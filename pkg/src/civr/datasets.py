"""Ingestion of daily portfolio-return tables.

Accepts the industry-portfolio CSV layout: arbitrary preamble lines, then
rows of an integer yyyymmdd date followed by one numeric return per
portfolio.  Rows carrying the library's missing-data sentinels (-99.99 or
-999) are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SENTINELS = (-99.99, -999.0)
_MIN_DATE = 100_000  # 6-digit yyyymm at least; excludes bare-year summary blocks


@dataclass
class ReturnsDataset:
    dates: np.ndarray
    matrix: np.ndarray
    provenance: str

    @property
    def n_periods(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_assets(self) -> int:
        return self.matrix.shape[1]


def _parse_data_row(line: str, n_cols: int | None) -> tuple[int, list[float]] | None:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < 2:
        return None
    if n_cols is not None and len(parts) != n_cols + 1:
        return None
    try:
        date = int(parts[0])
    except ValueError:
        return None
    if date < _MIN_DATE:
        return None
    try:
        values = [float(p) for p in parts[1:]]
    except ValueError:
        return None
    return date, values


def ingest_returns_csv(path, take_last: int | None = None, scale: str = "percent") -> ReturnsDataset:
    """Parse a returns CSV into a dataset.

    ``scale="percent"`` divides by 100; ``"raw"`` keeps values as stored.
    ``take_last`` keeps only the most recent rows (after sentinel
    filtering).  Raises ``ValueError`` for unparsable files or when no
    rows survive.
    """
    if scale not in ("percent", "raw"):
        raise ValueError(f"scale must be 'percent' or 'raw', got {scale!r}")
    path = Path(path)
    dates: list[int] = []
    rows: list[list[float]] = []
    n_cols: int | None = None
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parsed = _parse_data_row(line, n_cols)
            if parsed is None:
                continue
            date, values = parsed
            if n_cols is None:
                n_cols = len(values)
            dates.append(date)
            rows.append(values)
    if not rows:
        raise ValueError(f"no data rows found in {path}")
    matrix = np.asarray(rows, dtype=np.float64)
    keep = np.ones(matrix.shape[0], dtype=bool)
    for sentinel in SENTINELS:
        keep &= ~np.any(np.abs(matrix - sentinel) < 1e-9, axis=1)
    matrix = matrix[keep]
    date_arr = np.asarray(dates, dtype=np.int64)[keep]
    if matrix.shape[0] == 0:
        raise ValueError(f"no rows left after sentinel filtering in {path}")
    if scale == "percent":
        matrix = matrix / 100.0
    if take_last is not None and take_last > 0 and matrix.shape[0] > take_last:
        matrix = matrix[-take_last:]
        date_arr = date_arr[-take_last:]
    provenance = f"{path} scale={scale} take_last={take_last or 'all'}"
    return ReturnsDataset(dates=date_arr, matrix=np.ascontiguousarray(matrix), provenance=provenance)


def write_returns_csv(dataset: ReturnsDataset, path) -> None:
    """Emit a dataset back to CSV; re-ingesting with ``scale="raw"`` and no
    row limit reproduces the matrix exactly."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date," + ",".join(f"col{j}" for j in range(dataset.n_assets)) + "\n")
        for date, row in zip(dataset.dates, dataset.matrix):
            fh.write(str(int(date)) + "," + ",".join(format(v, ".17g") for v in row) + "\n")
