"""Deterministic CSV and JSON output.

CSV dialect: comma separated, '.' decimal, header row always, LF endings,
floats with 17 significant digits.  JSON reports keep insertion order and
stock float repr, so identical runs are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if hasattr(v, "item"):
        return _format_value(v.item())
    return str(v)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(v) for v in row) + "\n")


def _jsonify(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, float) and obj != obj:  # NaN -> null for valid JSON
        return None
    return obj


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonify(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")


def json_bytes(payload: dict) -> bytes:
    return (json.dumps(_jsonify(payload), indent=2, allow_nan=False) + "\n").encode()
