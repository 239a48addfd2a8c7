"""CSV ingestion and emission, deseasonalization, and trace comparison.

All CSV files are UTF-8, comma separated, with a header row and LF line
endings. Floats are written with ``repr`` (shortest round-trip form), so a
written file re-reads to identical values.

Dataset schemas
---------------
``series``      single ``value`` column, optionally preceded by ``t``
``cet``         ``year,day_of_year,value``; day 366 rows are dropped
``regression``  ``y,x1,...,xd``
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .exceptions import IngestionError
from .measures import ErrorEvolution
from .schemes import RootTrace

__all__ = [
    "SeasonalSeries",
    "ingest_csv",
    "ingest_seasonal",
    "deseasonalize",
    "write_dataset",
    "write_seasonal",
    "write_trace",
    "read_trace_roots",
    "write_evolution",
    "read_evolution",
    "compare",
    "write_table",
    "fmt",
]

SCHEMAS = ("series", "cet", "regression")
DAYS_PER_YEAR = 365


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class SeasonalSeries:
    values: np.ndarray
    day_of_year: np.ndarray
    year: np.ndarray

    def __post_init__(self):
        doy = np.asarray(self.day_of_year, dtype=np.int64)
        if doy.size and (doy.min() < 1 or doy.max() > DAYS_PER_YEAR):
            raise IngestionError(f"day_of_year must lie in [1, {DAYS_PER_YEAR}]")
        object.__setattr__(self, "day_of_year", doy)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "year", np.asarray(self.year, dtype=np.int64))


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path} is empty", line=1) from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(
                    f"expected {len(header)} fields, found {len(row)}", line=lineno
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_number(c))
                raise IngestionError(f"non-numeric cell {bad!r}", line=lineno) from None
    return header, rows


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_cet(path, drop_leap: bool):
    header, rows = _read_rows(path)
    if header != ["year", "day_of_year", "value"]:
        raise IngestionError(f"cet schema needs header year,day_of_year,value, got {header}", 1)
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    leap = arr[:, 1] == DAYS_PER_YEAR + 1
    if leap.any():
        if not drop_leap:
            line = int(np.flatnonzero(leap)[0]) + 2
            raise IngestionError("leap-day row (day 366) in cet data", line=line)
        arr = arr[~leap]
    bad = (arr[:, 1] < 1) | (arr[:, 1] > DAYS_PER_YEAR) | (arr[:, 1] != np.round(arr[:, 1]))
    if bad.any():
        raise IngestionError("day_of_year outside 1..365", line=int(np.flatnonzero(bad)[0]) + 2)
    return arr


def ingest_csv(path, schema: str = "series", drop_leap: bool = True) -> Dataset:
    """Read a dataset, preserving row order."""
    if schema not in SCHEMAS:
        raise IngestionError(f"unknown schema {schema!r}; choose from {SCHEMAS}")
    if schema == "cet":
        return Dataset(_read_cet(path, drop_leap)[:, 2])
    header, rows = _read_rows(path)
    if schema == "series":
        if header not in (["value"], ["t", "value"]):
            raise IngestionError(f"series schema needs header value or t,value, got {header}", 1)
        return Dataset(np.array([r[-1] for r in rows], dtype=float))
    d = len(header) - 1
    if d < 1 or header != ["y"] + [f"x{j}" for j in range(1, d + 1)]:
        raise IngestionError(f"regression schema needs header y,x1,...,xd, got {header}", 1)
    arr = np.array(rows, dtype=float).reshape(-1, d + 1)
    return Dataset(arr[:, 0], arr[:, 1:])


def ingest_seasonal(path, drop_leap: bool = True) -> SeasonalSeries:
    arr = _read_cet(path, drop_leap)
    return SeasonalSeries(arr[:, 2], arr[:, 1].astype(np.int64), arr[:, 0].astype(np.int64))


def deseasonalize(series: SeasonalSeries) -> Dataset:
    """Subtract from every value the mean of its calendar day across years.

    Every day from 1 up to the latest day present must occur at least once.
    """
    doy = series.day_of_year
    if doy.size == 0:
        raise IngestionError("empty series")
    counts = np.bincount(doy, minlength=doy.max() + 1)
    missing = np.flatnonzero(counts[1:] == 0)
    if missing.size:
        raise IngestionError(f"calendar day {int(missing[0]) + 1} has no observations")
    values = series.values
    means = np.zeros(counts.size)
    for day in range(1, counts.size):
        means[day] = math.fsum(values[doy == day].tolist()) / counts[day]
    return Dataset(values - means[doy])


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_dataset(path, data: Dataset) -> None:
    if data.X is None:
        _write_csv(path, ["t", "value"], ((t, v) for t, v in enumerate(data.y)))
    else:
        header = ["y"] + [f"x{j}" for j in range(1, data.d + 1)]
        _write_csv(path, header, ((y, *x) for y, x in zip(data.y, data.X)))


def write_seasonal(path, series: SeasonalSeries, values=None) -> None:
    vals = series.values if values is None else values
    _write_csv(
        path,
        ["year", "day_of_year", "value"],
        zip(series.year, series.day_of_year, vals),
    )


TRACE_HEADER = [
    "iteration_index",
    "completed_at",
    "status",
    "root_index",
    "root",
    "per_subset_measure",
]


def write_trace(path, trace: RootTrace) -> None:
    """Long format: one row per root; failed iterations get one empty row."""

    def rows():
        for rec in sorted(trace.records, key=lambda r: r.iteration_index):
            if rec.failed:
                yield (rec.iteration_index, rec.completed_at, "failed", None, None, None)
                continue
            for k, value in enumerate(rec.roots, start=1):
                yield (rec.iteration_index, rec.completed_at, "ok", k, value, rec.per_subset_measure)

    _write_csv(path, TRACE_HEADER, rows())


def read_trace_roots(path) -> list[tuple[str, ...]]:
    """All numerical trace columns except ``completed_at``, as raw strings."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        keep = [i for i, h in enumerate(header) if h != "completed_at"]
        return [tuple(row[i] for i in keep) for row in reader]


EVOLUTION_HEADER = ["t_seconds", "estimate", "error_rate"]


def write_evolution(path, evo: ErrorEvolution) -> None:
    _write_csv(path, EVOLUTION_HEADER, zip(evo.times, evo.estimates, evo.errors))


def read_evolution(path) -> ErrorEvolution:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVOLUTION_HEADER:
            raise IngestionError(f"{path}: not an evolution file (header {header})", line=1)
        evo = ErrorEvolution()
        for lineno, row in enumerate(reader, start=2):
            try:
                t, est, err = row
                evo.times.append(float(t))
                evo.estimates.append(float(est) if est else None)
                evo.errors.append(float(err) if err else None)
            except ValueError:
                raise IngestionError(f"{path}: malformed row {row}", line=lineno) from None
    return evo


def compare(traces: dict[str, list]) -> tuple[list[str], list[list[float | None]]]:
    """Wide table ``t, <label>...`` of error rates.

    ``traces`` maps a method label to one or more evolution files (or
    :class:`ErrorEvolution` objects); several entries are averaged pointwise.
    Every input must share one time grid.
    """
    grid = None
    columns = []
    for label, sources in traces.items():
        evos = [s if isinstance(s, ErrorEvolution) else read_evolution(s) for s in sources]
        if not evos:
            raise IngestionError(f"no traces given for {label!r}")
        for evo in evos:
            if grid is None:
                grid = evo.times
            elif evo.times != grid:
                raise IngestionError(f"time grid of {label!r} does not match the first trace")
        col = []
        for i in range(len(grid)):
            vals = [e.errors[i] for e in evos]
            col.append(None if any(v is None for v in vals) else math.fsum(vals) / len(vals))
        columns.append(col)
    header = ["t_seconds", *(f"error_{label}" for label in traces)]
    table = [[t, *(c[i] for c in columns)] for i, t in enumerate(grid or [])]
    return header, table


def write_table(path, header, table) -> None:
    _write_csv(path, header, table)
