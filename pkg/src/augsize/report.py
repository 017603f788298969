"""Deterministic JSON report emission.

Floats are rounded to 12 significant digits with non-finite values mapped to
``null``, so reruns with the same seed are byte-identical.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os

import numpy as np

SCHEMA_VERSION = 1
FLOAT_DIGITS = 12


def canonical(obj):
    """Recursively convert to plain JSON types with rounded floats."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(format(x, f".{FLOAT_DIGITS}g"))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def envelope(command, config, result, warnings=(), version="0", duration=None):
    doc = {"schema": SCHEMA_VERSION, "tool": "augsize", "version": version, "command": command,
           "config": config, "result": result, "warnings": sorted(set(warnings))}
    if duration is not None:
        doc["duration_s"] = duration
    return canonical(doc)


def dumps(doc):
    return json.dumps(canonical(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def emit_report(doc, path=None, stream=None):
    """Write ``doc`` to ``path`` (atomically) or to ``stream``; return the text."""
    text = dumps(doc)
    if path:
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    elif stream is not None:
        stream.write(text)
    return text


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def curve_csv_path(path):
    root, _ = os.path.splitext(path)
    return root + ".csv"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, f".{FLOAT_DIGITS}g") if math.isfinite(v) else ""
    return str(v)


def write_rows_csv(rows, path, header):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
