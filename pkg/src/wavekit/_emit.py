"""Deterministic machine-readable output: .dat, .csv, .json, checksums.

Every float is printed with %.17g, enough digits to reconstruct the exact
double, so byte-identical files mean bit-identical numbers and vice versa.
The JSON emitter is hand-rolled for the same reason: the stdlib encoder
prints floats with repr, which is value-exact but not literally 17
significant digits, and offers no hook to change that.  Keys are sorted and
indentation is fixed, so re-running a config reproduces the files byte for
byte.  json.loads reads everything back, including the NaN / Infinity
tokens used for failed scan entries.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math

import numpy as np

__all__ = [
    "fmt",
    "dumps_json",
    "write_json",
    "write_dat",
    "write_csv",
    "sha256_file",
    "sha256_text",
]


def fmt(x: float) -> str:
    """%.17g: shortest fixed policy that round-trips every finite double."""
    return "%.17g" % float(x)


def _atom(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return fmt(v)
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"not JSON-serialisable: {type(x).__name__}")


def _emit(x, indent: int) -> str:
    if isinstance(x, np.ndarray):
        x = x.tolist()
    if isinstance(x, dict):
        if not x:
            return "{}"
        pad = "  " * indent
        parts = []
        for key in sorted(x):
            if not isinstance(key, str):
                raise TypeError("JSON object keys must be strings")
            parts.append(f"{pad}  {json.dumps(key)}: {_emit(x[key], indent + 1)}")
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_emit(v, indent) for v in x) + "]"
    return _atom(x)


def dumps_json(obj) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, %.17g floats."""
    return _emit(obj, 0) + "\n"


def write_json(path: str, obj) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(obj))
    return path


def _columns(names, columns):
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(names):
        raise ValueError("one name per column required")
    sizes = {c.shape[0] for c in cols} if cols else set()
    if len(sizes) > 1:
        raise ValueError(f"columns must share a length, got {sorted(sizes)}")
    return cols


def write_dat(path: str, names, columns) -> str:
    """Whitespace-separated numeric table with a '#'-prefixed header line."""
    cols = _columns(names, columns)
    with open(path, "w", newline="\n") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    return path


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def write_csv(path: str, names, columns) -> str:
    """RFC-4180 table (CRLF rows, quoting handled by the csv module)."""
    cols = _columns(names, columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([_cell(v) for v in row])
    return path


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
