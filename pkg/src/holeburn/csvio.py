"""CSV traces: spectra, time traces, population traces and coherence data.

Numbers are written with 17 significant digits so that a write/read cycle
reproduces every float bit for bit. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import io
import sys
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import SchemaError
from .specdiff import CoherencePoint, Method

SPECTRUM_COLUMNS = ("detuning_hz", "od")
TRACE_COLUMNS = ("time_s", "value")
POPULATION_COLUMNS = ("time_s", "n_g", "n_e", "n_b")
COHERENCE_COLUMNS = ("field_t", "temperature_k", "t2_s", "t2_sigma_s", "method")


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    return "%.17g" % v


def _open_out(path) -> tuple[TextIO, bool]:
    if path is None or str(path) == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_table(path, columns: Sequence[str], data: Sequence[Iterable], comments: Sequence[str] = ()) -> None:
    """Write equal-length columns ``data`` under header ``columns``."""
    cols = [list(c) for c in data]
    if len(cols) != len(columns):
        raise ValueError("one data column per header name expected")
    if len({len(c) for c in cols}) > 1:
        raise ValueError("columns differ in length")
    fh, close = _open_out(path)
    try:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    finally:
        if close:
            fh.close()


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        text = Path(path).read_text() if str(path) != "-" else sys.stdin.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    header = None
    rows = []
    for lineno, line in enumerate(io.StringIO(text), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([line]))
        fields = [f.strip() for f in fields]
        if header is None:
            header = fields
        else:
            rows.append((lineno, fields))
    if header is None:
        raise SchemaError(f"{path}: no header line")
    return header, rows


def read_table(path, required: Sequence[str], text_columns: Sequence[str] = ()) -> dict[str, np.ndarray]:
    """Columns of a CSV keyed by header name; numeric unless in ``text_columns``.

    Extra columns are kept. Missing required columns, short rows and
    unparsable numbers raise :class:`SchemaError` naming row and column.
    """
    header, rows = _read_rows(path)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}; header is {','.join(header)}")
    out: dict[str, list] = {c: [] for c in header}
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise SchemaError(f"{path}: row at line {lineno} has {len(fields)} fields, expected {len(header)}")
        for name, raw in zip(header, fields):
            if name in text_columns:
                out[name].append(raw)
                continue
            try:
                v = float(raw)
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}, column {name}: not a number: {raw!r}") from None
            if not np.isfinite(v):
                raise SchemaError(f"{path}: line {lineno}, column {name}: non-finite value {raw!r}")
            out[name].append(v)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {k: (np.array(v, dtype=object) if k in text_columns else np.array(v, dtype=float)) for k, v in out.items()}


def write_spectrum(path, grid, od_columns: dict[str, np.ndarray], comments: Sequence[str] = ()) -> None:
    names = ("detuning_hz",) + tuple(od_columns)
    write_table(path, names, [grid, *od_columns.values()], comments)


def read_spectrum(path, column: str = "od") -> tuple[np.ndarray, np.ndarray]:
    t = read_table(path, ("detuning_hz", column))
    x, y = t["detuning_hz"], t[column]
    if np.any(np.diff(x) <= 0):
        raise SchemaError(f"{path}: column detuning_hz must increase strictly")
    return x, y


def write_trace(path, times, values, comments: Sequence[str] = ()) -> None:
    write_table(path, TRACE_COLUMNS, [times, values], comments)


def read_trace(path) -> tuple[np.ndarray, np.ndarray]:
    t = read_table(path, TRACE_COLUMNS)
    if np.any(np.diff(t["time_s"]) <= 0):
        raise SchemaError(f"{path}: column time_s must increase strictly")
    return t["time_s"], t["value"]


def write_coherence(path, points: Sequence[CoherencePoint], comments: Sequence[str] = ()) -> None:
    write_table(
        path, COHERENCE_COLUMNS,
        [[p.field for p in points], [p.temperature for p in points], [p.t2 for p in points],
         [p.t2_sigma for p in points], [p.method.value for p in points]],
        comments,
    )


def read_coherence(path) -> list[CoherencePoint]:
    t = read_table(path, COHERENCE_COLUMNS, text_columns=("method",))
    pts = []
    for i in range(len(t["field_t"])):
        try:
            pts.append(CoherencePoint(t["field_t"][i], t["temperature_k"][i], t["t2_s"][i],
                                      t["t2_sigma_s"][i], Method(t["method"][i])))
        except ValueError as exc:
            raise SchemaError(f"{path}: data row {i + 1}: {exc}") from None
    return pts
