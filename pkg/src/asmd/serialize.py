"""Deterministic text serialization helpers.

All numeric output (instance files, result files, trace CSVs) goes through
``format_real`` so reruns with identical inputs produce byte-identical
files and every value round-trips to the exact same double.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile

import numpy as np


def format_real(x: float) -> str:
    """Render a double with 17 significant digits (round-trip exact)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    s = f"{x:.17g}"
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_real(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {_render(v, indent + 1)}" for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            return "[]"
        # nested structures go one per line, flat numeric rows stay inline
        if any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            inner = ",\n".join(f"{pad}  {_render(v, indent + 1)}" for v in items)
            return "[\n" + inner + "\n" + pad + "]"
        return "[" + ", ".join(_render(v, indent) for v in items) + "]"
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def canonical_json(doc) -> str:
    """JSON text with stable key order, indentation and float formatting."""
    return _render(doc, 0) + "\n"


def vector_digest(vec) -> str:
    """Short hex digest of a vector's canonical serialization."""
    payload = canonical_json([float(v) for v in vec])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:8]


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file and rename, so failures leave no partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
