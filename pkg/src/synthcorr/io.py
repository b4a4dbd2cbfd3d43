"""File output: atomic writes and CSV with a metadata comment header."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    return format(float(x), ".17g")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def csv_text(columns: dict, metadata: dict | None = None) -> str:
    lines = []
    for key, val in (metadata or {}).items():
        lines.append(f"# {key}: {json.dumps(val, sort_keys=True, default=_json_default)}")
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    length = {c.shape[0] for c in cols}
    if len(length) != 1:
        raise ValueError("columns must have equal lengths")
    lines.append(",".join(names))
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns: dict, metadata: dict | None = None) -> None:
    write_atomic(path, csv_text(columns, metadata))


def write_matrix_csv(path, matrix, row_axis, col_axis, metadata: dict | None = None,
                     row_name: str = "row", col_name: str = "col") -> None:
    m = np.asarray(matrix, dtype=float)
    lines = [f"# {k}: {json.dumps(v, sort_keys=True, default=_json_default)}" for k, v in (metadata or {}).items()]
    lines.append(f"{row_name}\\{col_name}," + ",".join(fmt(c) for c in col_axis))
    for r, row in zip(row_axis, m):
        lines.append(fmt(r) + "," + ",".join(fmt(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    """Return (metadata, columns) from a file written by :func:`write_csv`."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = json.loads(val)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows).reshape(-1, len(header))
    return meta, {h: data[:, i] for i, h in enumerate(header)}
