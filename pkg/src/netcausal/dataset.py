"""Column-oriented datasets of continuous variables.

A :class:`Dataset` is an immutable table: an ordered schema of named
variables and one float column per variable. CSV ingestion drops rows
containing anything that does not parse as a finite number and reports
how many were dropped, so every downstream consumer can assume clean,
finite columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class VariableMeta:
    """Name, unit, and free-text description of one variable."""

    name: str
    unit: str = ""
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")


@dataclass(frozen=True)
class SummaryRow:
    """Per-variable summary: min, max, mean, and coefficient of variation."""

    variable: str
    min: float
    max: float
    avg: float
    coeff_var: float


class Dataset:
    """Immutable collection of equal-length float columns.

    Columns are stored per variable (most downstream work is column-wise:
    Gram matrices, ranks, empirical CDFs). Instances are safe to share
    across threads; the arrays are marked read-only.
    """

    def __init__(self, schema: Sequence[VariableMeta], columns: dict[str, np.ndarray],
                 dropped_rows: int = 0):
        schema = tuple(schema)
        names = [m.name for m in schema]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names in schema")
        if set(columns) != set(names):
            raise ValueError("columns do not match schema names")
        lengths = {len(columns[name]) for name in names}
        if len(lengths) != 1:
            raise ValueError("columns have differing lengths")
        n = lengths.pop()
        if n < 1:
            raise ValueError("dataset must contain at least one row")
        store = {}
        for name in names:
            col = np.asarray(columns[name], dtype=float)
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column {name!r} contains non-finite values")
            col = col.copy()
            col.flags.writeable = False
            store[name] = col
        self.schema = schema
        self.columns = store
        self.n = n
        self.dropped_rows = dropped_rows

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.schema)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        """Stack the requested columns into an (n, k) matrix."""
        return np.column_stack([self.column(name) for name in names])

    def meta(self, name: str) -> VariableMeta:
        for m in self.schema:
            if m.name == name:
                return m
        raise KeyError(f"unknown variable {name!r}")

    def __repr__(self):
        return f"Dataset(n={self.n}, variables={list(self.names)})"


def load_csv(path, schema: Sequence[VariableMeta] | None = None) -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    Rows containing empty, non-numeric, or non-finite cells are dropped;
    the count of dropped rows is recorded on the returned dataset.

    Raises:
        OSError: unreadable file.
        ValueError: header does not match the supplied schema, or no row
            survives the numeric filter.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if schema is not None:
            expected = [m.name for m in schema]
            if header != expected:
                raise ValueError(
                    f"{path}: header {header} does not match schema {expected}")
            metas = tuple(schema)
        else:
            metas = tuple(VariableMeta(name=h) for h in header)

        rows = []
        dropped = 0
        width = len(header)
        for raw in reader:
            if not raw:
                continue
            if len(raw) != width:
                dropped += 1
                continue
            try:
                values = [float(cell) for cell in raw]
            except ValueError:
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in values):
                dropped += 1
                continue
            rows.append(values)

    if not rows:
        raise ValueError(f"{path}: zero usable rows after dropping {dropped} bad rows")

    data = np.array(rows, dtype=float)
    columns = {name: data[:, j] for j, name in enumerate(header)}
    return Dataset(metas, columns, dropped_rows=dropped)


def write_csv(d: Dataset, path) -> None:
    """Write a dataset back out as CSV (header row, full float precision)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.names)
        mat = d.matrix(d.names)
        for row in mat:
            writer.writerow([repr(float(v)) for v in row])


def summarize(d: Dataset) -> list[SummaryRow]:
    """Min / max / mean / coefficient of variation for every column.

    The coefficient of variation is the sample standard deviation (ddof=1)
    divided by the mean; at least two rows are required.
    """
    if d.n < 2:
        raise ValueError("summary needs at least 2 rows (sample variance undefined)")
    out = []
    for name in d.names:
        col = d.column(name)
        avg = float(col.mean())
        sd = float(col.std(ddof=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            cv = sd / avg if avg != 0.0 else float("nan")
        out.append(SummaryRow(variable=name, min=float(col.min()),
                              max=float(col.max()), avg=avg, coeff_var=cv))
    return out


def standardize(d: Dataset) -> Dataset:
    """Rescale every column to mean 0 and sample variance 1."""
    columns = {}
    for name in d.names:
        col = d.column(name)
        sd = float(col.std(ddof=1)) if d.n > 1 else 0.0
        if sd <= 0.0:
            raise ValueError(f"column {name!r} has zero variance, cannot standardize")
        columns[name] = (col - col.mean()) / sd
    return Dataset(d.schema, columns, dropped_rows=d.dropped_rows)
