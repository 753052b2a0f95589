"""Reading and writing samples of tables as CSV.

Two encodings are supported:

* long: header ``sample_id,row_level,col_level,value``, one cell per line;
* wide: header ``sample_id,<row>:<col>,...``, one sample per line.

Factor levels are ordered by first appearance unless an explicit order is
given.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import HeterogeneousLevels, IncompleteTable, InvalidComposition, InvalidData
from .pca import TableSample
from .tables import CompositionalTable

LONG_HEADER = ("sample_id", "row_level", "col_level", "value")
FORMATS = ("long", "wide")


@dataclass(frozen=True)
class LongRecord:
    sample_id: str
    row_level: str
    col_level: str
    value: float


def atomic_write(path: str | os.PathLike, data: str | bytes) -> None:
    """Write ``data`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_value(text: str, sample_id: str, cell: tuple[str, str]) -> float:
    text = (text or "").strip()
    if not text:
        raise IncompleteTable(sample_id, cell)
    try:
        value = float(text)
    except ValueError:
        raise InvalidData(f"sample {sample_id!r}, cell {cell!r}: {text!r} is not a number") from None
    if not np.isfinite(value) or value <= 0:
        raise InvalidComposition(f"sample {sample_id!r}, cell {cell!r}: value {value} is not positive")
    return value


def _unique(seq: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(seq))


def read_long_records(path: str | os.PathLike) -> Iterator[LongRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = [c for c in LONG_HEADER if c not in reader.fieldnames]
        if missing:
            raise InvalidData(f"long-form CSV lacks columns {missing}")
        for line in reader:
            sid, r, c = line["sample_id"].strip(), line["row_level"].strip(), line["col_level"].strip()
            yield LongRecord(sid, r, c, _parse_value(line["value"], sid, (r, c)))


def _read_wide(path) -> Iterator[tuple[str, dict[tuple[str, str], str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if not header or header[0].strip() != "sample_id":
            raise InvalidData("wide-form CSV must start with a sample_id column")
        cells = []
        for name in header[1:]:
            if ":" not in name:
                raise InvalidData(f"wide-form column {name!r} is not of the form row:col")
            r, c = name.split(":", 1)
            cells.append((r.strip(), c.strip()))
        for row in reader:
            if not row or not any(x.strip() for x in row):
                continue
            sid = row[0].strip()
            values = row[1:] + [""] * (len(cells) + 1 - len(row))
            yield sid, dict(zip(cells, values))


def _records(path, fmt: str) -> list[LongRecord]:
    if fmt == "long":
        return list(read_long_records(path))
    if fmt == "wide":
        out = []
        for sid, cells in _read_wide(path):
            for (r, c), text in cells.items():
                out.append(LongRecord(sid, r, c, _parse_value(text, sid, (r, c))))
        return out
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def tables_from_records(
    records: Sequence[LongRecord],
    row_levels: Sequence[str] | None = None,
    col_levels: Sequence[str] | None = None,
) -> list[CompositionalTable]:
    """Assemble complete I x J tables, one per sample id."""
    if not records:
        raise IncompleteTable(None, None, "no samples found in input")
    rows = list(row_levels) if row_levels else _unique(r.row_level for r in records)
    cols = list(col_levels) if col_levels else _unique(r.col_level for r in records)
    by_sample: dict[str, dict[tuple[str, str], float]] = {}
    for rec in records:
        cells = by_sample.setdefault(rec.sample_id, {})
        key = (rec.row_level, rec.col_level)
        if key in cells:
            raise InvalidData(f"duplicate cell {key!r} for sample {rec.sample_id!r}")
        cells[key] = rec.value

    row_set, col_set = set(rows), set(cols)
    tables = []
    for sid, cells in by_sample.items():
        seen_rows = {r for r, _ in cells}
        seen_cols = {c for _, c in cells}
        if seen_rows != row_set or seen_cols != col_set:
            raise HeterogeneousLevels(
                f"sample {sid!r} has row levels {sorted(seen_rows)} and column levels {sorted(seen_cols)}; "
                f"expected {rows} and {cols}"
            )
        grid = np.empty((len(rows), len(cols)))
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                if (r, c) not in cells:
                    raise IncompleteTable(sid, (r, c))
                grid[i, j] = cells[(r, c)]
        tables.append(CompositionalTable(grid, tuple(rows), tuple(cols), sid))
    return tables


def ingest_csv(
    path: str | os.PathLike,
    format: str = "long",
    row_levels: Sequence[str] | None = None,
    col_levels: Sequence[str] | None = None,
    part: str = "whole",
) -> TableSample:
    """Read a sample of compositional tables from a UTF-8 CSV file.

    Raises:
        IncompleteTable: a sample lacks a cell, or the file holds no data.
        InvalidComposition: a value is zero or negative.
        HeterogeneousLevels: samples use different factor levels.
    """
    tables = tables_from_records(_records(path, format), row_levels, col_levels)
    return TableSample(tuple(tables), part)


def sample_to_records(sample: TableSample) -> list[LongRecord]:
    out = []
    for sid, t in zip(sample.sample_ids, sample.tables):
        for i, r in enumerate(t.row_labels):
            for j, c in enumerate(t.col_labels):
                out.append(LongRecord(sid, r, c, float(t.cells[i, j])))
    return out


def format_csv(sample: TableSample, format: str = "long") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if format == "long":
        writer.writerow(LONG_HEADER)
        for rec in sample_to_records(sample):
            writer.writerow([rec.sample_id, rec.row_level, rec.col_level, repr(rec.value)])
    elif format == "wide":
        rows, cols = sample.row_labels, sample.col_labels
        writer.writerow(["sample_id"] + [f"{r}:{c}" for r in rows for c in cols])
        for sid, t in zip(sample.sample_ids, sample.tables):
            writer.writerow([sid] + [repr(float(v)) for v in t.cells.ravel()])
    else:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    return buf.getvalue()


def write_csv(sample: TableSample, path: str | os.PathLike, format: str = "long") -> None:
    atomic_write(path, format_csv(sample, format))


def fixture_path() -> Path:
    """Bundled four-country excerpt of the 2010 OECD unemployment counts (thousands)."""
    return Path(__file__).parent / "data" / "oecd_unemployment_2010_excerpt.csv"
