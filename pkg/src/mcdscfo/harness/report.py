"""CSV and JSON serialization of experiment reports."""

import csv
import io
import json
import math

import numpy as np

from ..exceptions import InvalidArgumentError
from .experiments import ExperimentReport, Record

__all__ = ["COLUMNS", "emit_report", "read_report", "format_number", "render"]

COLUMNS = ("sweep", "series", "value", "ci95", "trials", "seed")


def format_number(x):
    """Nine significant digits; integers stay integers."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def _row(record):
    return [
        format_number(record.sweep),
        record.series,
        format_number(record.value),
        format_number(record.ci95),
        str(int(record.trials)),
        str(int(record.seed)),
    ]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(format_number(obj))
    return str(obj)


def render(report, fmt="csv"):
    """Report as text in ``csv`` or ``json`` form."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in report.records:
            writer.writerow(_row(record))
        return buf.getvalue()
    if fmt == "json":
        # numbers go through the same 9-digit rendering as the CSV
        rows = []
        for record in report.records:
            cells = dict(zip(COLUMNS, _row(record)))
            rows.append(
                {
                    "sweep": _num(cells["sweep"]),
                    "series": record.series,
                    "value": _num(cells["value"]),
                    "ci95": _num(cells["ci95"]),
                    "trials": int(record.trials),
                    "seed": int(record.seed),
                }
            )
        payload = {"records": rows, "metadata": _jsonable(report.metadata)}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise InvalidArgumentError(f"unknown report format {fmt!r}")


def _num(text):
    value = float(text)
    return value if math.isfinite(value) else text


def emit_report(report, fmt, path):
    """Write ``report`` to ``path``; I/O errors name the path."""
    text = render(report, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc


def read_report(path, fmt=None):
    """Parse a report written by :func:`emit_report`."""
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "json":
        payload = json.loads(text)
        rows = payload["records"]
        metadata = payload.get("metadata", {})
    else:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise InvalidArgumentError(f"{path}: unexpected CSV header {reader.fieldnames}")
        rows = list(reader)
        metadata = {}
    records = tuple(
        Record(
            sweep=float(r["sweep"]),
            series=str(r["series"]),
            value=float(r["value"]),
            ci95=float(r["ci95"]),
            trials=int(r["trials"]),
            seed=int(r["seed"]),
        )
        for r in rows
    )
    return ExperimentReport(records, metadata)
