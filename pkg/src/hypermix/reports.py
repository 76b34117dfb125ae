"""Deterministic report serialisation: stable JSON and header-first CSV.

Identical inputs must serialise to identical bytes, so JSON keys are
sorted and floats pass through ``repr`` via the json module unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional

import numpy as np


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays so json can serialise them."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def render_json(report) -> str:
    return json.dumps(to_builtin(report), sort_keys=True, indent=2) + "\n"


def render_csv(rows: list[dict], columns: Optional[list[str]] = None) -> str:
    """CSV with a header row; column order is the given list or the sorted
    union of row keys.  An empty row list renders a header-only document
    (or an empty one when no columns are known)."""
    if columns is None:
        seen: dict[str, None] = {}
        for row in rows:
            for key in row:
                seen.setdefault(str(key))
        columns = sorted(seen)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    if columns:
        writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, float) and math.isnan(value):
        return ""
    return value


def emit(text: str, out_path=None) -> None:
    """Write to a file or standard output."""
    if out_path is None:
        import sys

        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
