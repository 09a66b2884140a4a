"""Named-column tables and the CSV wire format shared by all generators.

Columns are numpy arrays: int64 or float64 for numeric data, object for
string-level columns (non-numeric treatment levels). Floats are written with
their shortest round-trip decimal representation so a seeded generator
produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CsvFormatError(Exception):
    """A cell failed numeric parsing in an otherwise numeric column."""

    def __init__(self, row: int, column: str, cell: str):
        self.row = row
        self.column = column
        self.cell = cell
        super().__init__(f"row {row}: cell {cell!r} in column '{column}' is not a number")


@dataclass(frozen=True)
class TabularDataset:
    """A column-ordered numeric table."""

    columns: tuple[str, ...]
    data: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if set(self.columns) != set(self.data):
            raise ValueError("column list and data keys disagree")
        lengths = {len(v) for v in self.data.values()}
        if len(lengths) > 1:
            raise ValueError("ragged columns")

    @property
    def n_rows(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def col(self, name: str) -> np.ndarray:
        return self.data[name]

    def is_numeric(self, name: str) -> bool:
        return self.data[name].dtype.kind in "if"

    def numeric_matrix(self, names: list[str]) -> np.ndarray:
        """Stack the named numeric columns as an (n, k) float matrix."""
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.data[n].astype(float) for n in names])


def from_columns(pairs: list[tuple[str, np.ndarray]]) -> TabularDataset:
    return TabularDataset(tuple(name for name, _ in pairs), {name: np.asarray(col) for name, col in pairs})


def _format_cell(value) -> str:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def write_csv_text(dataset: TabularDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset.columns)
    cols = [dataset.data[name] for name in dataset.columns]
    for i in range(dataset.n_rows):
        writer.writerow([_format_cell(col[i]) for col in cols])
    return buf.getvalue()


def write_csv(dataset: TabularDataset, path: str | Path) -> None:
    Path(path).write_text(write_csv_text(dataset), encoding="utf-8")


def read_csv_text(text: str) -> TabularDataset:
    """Parse CSV with a header row.

    Each column becomes float64 when every cell parses as a number and an
    object (string) column when none do. A mixed column means malformed data:
    the offending row is reported via :class:`CsvFormatError`.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError(0, "<header>", "") from None
    rows = [row for row in reader if row]
    for idx, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise CsvFormatError(idx, "<row>", ",".join(row))

    data: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in rows]
        parsed: list[float] = []
        bad_row = 0
        for i, cell in enumerate(raw, start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                bad_row = i
                break
        if bad_row == 0:
            data[name] = np.asarray(parsed, dtype=float)
        elif bad_row == 1 and not any(_is_number(c) for c in raw):
            data[name] = np.asarray(raw, dtype=object)
        else:
            first_bad = next(i for i, c in enumerate(raw, start=1) if not _is_number(c))
            raise CsvFormatError(first_bad, name, raw[first_bad - 1])
    return TabularDataset(tuple(header), data)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def read_csv(path: str | Path) -> TabularDataset:
    return read_csv_text(Path(path).read_text(encoding="utf-8"))
