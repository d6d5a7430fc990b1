"""Data ingestion and result emission.

Data files are CSV with one observation per row and one or more numeric
columns, with or without a header line. Result records are flat dicts
written as CSV or JSON lines: UTF-8, ``\\n`` line endings, floats in
shortest round-trip form, so reading a file back gives the same values.
"""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import Dataset
from .errors import DataFormatError

WARNING_SEPARATOR = " | "

# canonical leading columns for result files; other keys follow in first-seen order
RECORD_FIELDS = ("record", "method", "n", "m", "level", "lower", "upper", "coverage", "mean_length", "beta_hat", "warnings")


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_dataset(text, columns=None):
    """Parse CSV text into ``(Dataset, header)``.

    The first non-blank line is a header when any of its fields is not a
    number. Blank lines are skipped. ``columns`` selects 0-based columns.
    """
    header = None
    rows = []
    width = None
    for lineno, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        fields = [f.strip() for f in fields]
        if not fields or all(f == "" for f in fields):
            continue
        if header is None and not rows and not all(_is_number(f) for f in fields):
            header = fields
            width = len(fields)
            continue
        if width is None:
            width = len(fields)
        if len(fields) != width:
            raise DataFormatError(lineno, f"expected {width} fields, found {len(fields)}")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            bad = next(f for f in fields if not _is_number(f))
            raise DataFormatError(lineno, f"cannot parse {bad!r} as a number") from None
        if not all(math.isfinite(v) for v in row):
            raise DataFormatError(lineno, "non-finite value")
        rows.append(row)
    if not rows:
        raise DataFormatError(max(1, text.count("\n")), "no data rows")
    values = np.array(rows, dtype=np.float64)
    if columns is not None:
        columns = list(columns)
        if any(not 0 <= c < values.shape[1] for c in columns):
            raise DataFormatError(1, f"column selection {columns} outside the {values.shape[1]} available columns")
        values = values[:, columns]
        if header is not None:
            header = [header[c] for c in columns]
    return Dataset(values), header


def read_dataset(path, columns=None):
    """Read a data file; returns ``(Dataset, header or None)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), columns)


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple)):
        return WARNING_SEPARATOR.join(str(x) for x in v)
    return str(v)


def write_dataset(path, data, header=None):
    data = Dataset.coerce(data)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in data.values:
            w.writerow([repr(float(v)) for v in row])


def record_fields(records):
    seen = []
    for rec in records:
        for k in rec:
            if k not in seen:
                seen.append(k)
    lead = [k for k in RECORD_FIELDS if k in seen]
    return lead + [k for k in seen if k not in RECORD_FIELDS]


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def dumps_records(records, fmt="csv"):
    """Serialise records to a string in ``"csv"`` or ``"jsonl"`` format."""
    records = list(records)
    if fmt == "jsonl":
        return "".join(json.dumps({k: _jsonable(v) for k, v in rec.items()}) + "\n" for rec in records)
    if fmt != "csv":
        raise ValueError(f"unknown record format {fmt!r}")
    fields = record_fields(records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for rec in records:
        w.writerow([format_value(rec.get(k)) for k in fields])
    return buf.getvalue()


def write_records(records, path, fmt=None):
    """Write records to ``path``; the format follows the suffix (``.jsonl``/``.json`` or CSV)."""
    fmt = fmt or format_for(path)
    Path(path).write_bytes(dumps_records(records, fmt).encode("utf-8"))


def format_for(path):
    return "jsonl" if str(path).endswith((".jsonl", ".json")) else "csv"


def _parse_cell(key, text):
    if key == "warnings":
        return text.split(WARNING_SEPARATOR) if text else []
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def loads_records(text, fmt="csv"):
    """Inverse of :func:`dumps_records`. Empty CSV cells come back as ``None``."""
    if fmt == "jsonl":
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    reader = csv.reader(io.StringIO(text))
    try:
        fields = next(reader)
    except StopIteration:
        return []
    return [{k: _parse_cell(k, v) for k, v in zip(fields, row)} for row in reader]


def read_records(path, fmt=None):
    fmt = fmt or format_for(path)
    return loads_records(Path(path).read_text(encoding="utf-8"), fmt)
