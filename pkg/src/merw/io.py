"""Text output: CSV tables, JSON reports and run manifests.

Floats are written with 17 significant digits, files are UTF-8 with LF line
endings. NaN and infinities become ``null`` in JSON and empty cells in CSV.
"""
from __future__ import annotations

import io
import json
import math
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

MANIFEST_SCHEMA = 1


def fmt(x) -> str:
    """One CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return ""
    return format(x, ".17g")


def to_plain(obj):
    """Convert numpy arrays, fractions, enums and dataclass-like values to JSON-ready data."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    return obj


def _encode(obj, indent, level) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(to_plain(obj), indent, 0) + "\n"


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue()


def trajectory_csv(trajectory) -> str:
    """``step,s1,...,sd`` with one row per recorded step."""
    d = trajectory.positions.shape[1]
    header = ["step"] + [f"s{i + 1}" for i in range(d)]
    rows = (np.concatenate([[s], p]) for s, p in zip(trajectory.steps, trajectory.positions))
    return csv_text(header, rows)


def moment_header(d: int, extra=()) -> list:
    head = ["n"] + [f"e_s{i + 1}" for i in range(d)]
    head += [f"cov{i + 1}_{j + 1}" for i in range(d) for j in range(d)]
    return head + list(extra)


def moment_rows(table, extra_columns=None):
    """Rows ``n, E[S_n], E[S_n S_n^T]`` (row-major) followed by extra columns."""
    extra_columns = extra_columns or {}
    for i, n in enumerate(table.ns):
        row = [int(n)] + [float(x) for x in table.mean[i]]
        row += [float(x) for x in np.asarray(table.second[i]).ravel()]
        row += [col[i] for col in extra_columns.values()]
        yield row


def moment_csv(table, extra_columns=None) -> str:
    extra_columns = extra_columns or {}
    return csv_text(moment_header(table.d, extra_columns.keys()), moment_rows(table, extra_columns))


def series_csv(steps, values, names=None) -> str:
    """``n,value...``; matrix-valued series are flattened row-major."""
    values = np.asarray(values, float).reshape(len(steps), -1)
    if names is None:
        names = ["value"] if values.shape[1] == 1 else [f"value{i + 1}" for i in range(values.shape[1])]
    return csv_text(["n"] + list(names), (np.concatenate([[s], v]) for s, v in zip(steps, values)))


def manifest(subcommand: str, config: dict, outputs, version: str, engine=None, seed=None) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA,
        "tool": "merw",
        "version": version,
        "subcommand": subcommand,
        "engine": engine,
        "seed": seed,
        "config": config,
        "outputs": [str(p) for p in outputs],
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
