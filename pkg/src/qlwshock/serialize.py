"""Deterministic CSV/JSON writers and input hashing.

Outputs from identical configs must be byte-identical: iteration orders
are fixed by construction, CSV floats are rendered with 17 significant
digits, and JSON uses Python's shortest round-trip float repr (also
deterministic for equal values).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = ["fmt", "write_csv", "write_json", "content_hash", "to_jsonable"]


def fmt(x) -> str:
    """Render one float with 17 significant digits."""
    return format(float(x), ".17g")


def write_csv(path, header: list[str], columns: list) -> None:
    """Write columns (equal-length 1D arrays) under the given header."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(fmt(c[i]) for c in cols) + "\n")


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and dataclass-ish objects
    into plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(obj), fh, indent=2)
        fh.write("\n")


def content_hash(*parts) -> str:
    """sha256 over byte/str/array parts, first 16 hex digits."""
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, str):
            h.update(p.encode("utf-8"))
        elif isinstance(p, bytes):
            h.update(p)
        elif isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p).tobytes())
        else:
            h.update(repr(p).encode("utf-8"))
    return h.hexdigest()[:16]
