"""
Plot-ready CSV output with a leading ``#`` metadata block.

Floats are written with 17 significant digits so that values round-trip
exactly. No timestamps or host information are written, so identical
inputs give identical files.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ArgumentError


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], metadata: dict[str, Any] | None = None) -> str:
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        text = format_value(value)
        if "\n" in text:
            raise ArgumentError("metadata values must be single-line")
        buf.write(f"# {key}: {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ArgumentError(f"row has {len(row)} fields, header has {width}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header, rows, metadata=None) -> str:
    text = render_csv(header, rows, metadata)
    Path(path).write_text(text)
    return text


def parse_csv(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Split text produced by :func:`render_csv` into metadata, header and rows."""
    metadata: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(": ")
        metadata[key] = value
        i += 1
    reader = list(csv.reader(lines[i:]))
    if not reader:
        raise ArgumentError("CSV has no header")
    return metadata, reader[0], reader[1:]


def body(text: str) -> str:
    """Header and data lines, without the metadata block."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
