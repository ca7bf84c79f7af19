"""Artifact emission: delimited tables, summary documents, plain-text rendering.

Every delimited file starts with ``#``-prefixed header lines embedding the
fully resolved configuration, so a run can be reproduced from its artifacts
alone.  Floats are written with 17 significant digits; parsing the text
back recovers the original 64-bit value bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .series import TimeSeries

#: enough digits that float(format(x)) == x for every finite 64-bit float
FLOAT_FORMAT = "%.16e"


def format_float(x: float) -> str:
    if math.isfinite(x):
        return FLOAT_FORMAT % x
    return str(x)  # inf / -inf / nan


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _header_value(value: Any) -> str:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    try:
        return json.dumps(value)
    except TypeError:
        return json.dumps(str(value))


def header_lines(items: Iterable[tuple[str, Any]]) -> list[str]:
    """Render resolved-config pairs as '# key = value' comment lines."""
    return [f"# {key} = {_header_value(value)}" for key, value in items]


def write_table(
    path: str | Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    header_items: Iterable[tuple[str, Any]] = (),
) -> Path:
    """Write one delimited table with embedded config header lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for line in header_lines(header_items):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(row[name]) for name in fieldnames])
    return path


def write_timeseries(
    path: str | Path,
    series: TimeSeries,
    header_items: Iterable[tuple[str, Any]] = (),
) -> Path:
    """Serialize a TimeSeries: header lines, scalar metadata, then columns.

    Columns are ``t_s`` followed by one column per observable label.
    """
    meta_items = [
        (f"meta.{k}", v)
        for k, v in sorted(series.meta.items())
        if isinstance(v, (str, int, float, bool)) and not k.startswith("_")
    ]
    fieldnames = ["t_s", *series.labels]
    rows = (
        {
            "t_s": float(t),
            **{lab: float(v) for lab, v in zip(series.labels, vals)},
        }
        for t, vals in zip(series.times, series.values)
    )
    return write_table(path, fieldnames, rows, [*header_items, *meta_items])


def read_timeseries(path: str | Path) -> TimeSeries:
    """Parse a file written by write_timeseries; floats round-trip bit-exactly.

    Header pairs land in ``meta`` (the ``meta.`` prefix stripped for series
    metadata, config keys kept as written).
    """
    path = Path(path)
    meta: dict[str, Any] = {}
    body = io.StringIO()
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition("=")
                if sep:
                    key = key.strip()
                    raw = value.strip()
                    try:
                        parsed: Any = json.loads(raw)
                    except json.JSONDecodeError:
                        parsed = raw
                    if key.startswith("meta."):
                        key = key[len("meta."):]
                    meta[key] = parsed
                continue
            body.write(line)
    body.seek(0)
    reader = csv.reader(body)
    try:
        fieldnames = next(reader)
    except StopIteration:
        raise ConfigError(f"{path}: no column header found") from None
    if not fieldnames or fieldnames[0] != "t_s":
        raise ConfigError(f"{path}: first column must be t_s, got {fieldnames[:1]}")
    data = [[float(cell) for cell in row] for row in reader if row]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(fieldnames):
        raise ConfigError(f"{path}: malformed table body")
    return TimeSeries(
        times=arr[:, 0],
        values=arr[:, 1:],
        labels=tuple(fieldnames[1:]),
        meta=meta,
    )


def _jsonable(node: Any) -> Any:
    if isinstance(node, Mapping):
        return {str(k): _jsonable(v) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [_jsonable(v) for v in node]
    if isinstance(node, (np.floating, np.integer)):
        node = node.item()
    if isinstance(node, float) and not math.isfinite(node):
        return str(node)
    if node is None or isinstance(node, (bool, int, float, str)):
        return node
    return str(node)


def write_summary(path: str | Path, payload: Mapping[str, Any]) -> Path:
    """Write the structured summary document (strict JSON, UTF-8, LF).

    Non-finite floats are rendered as the strings "inf"/"-inf"/"nan" so the
    document stays parseable by strict readers.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def render_summary(payload: Mapping[str, Any]) -> str:
    """The same document rendered for a terminal: one aligned block per section."""
    blocks = []
    for section, content in payload.items():
        lines = [f"[{section}]"]
        if isinstance(content, Mapping):
            width = max((len(str(k)) for k in content), default=0)
            for k, v in content.items():
                lines.append(f"  {str(k):<{width}}  {_render_value(v)}")
        elif isinstance(content, (list, tuple)):
            for entry in content:
                lines.append(f"  {_render_value(entry)}")
        else:
            lines.append(f"  {_render_value(content)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _render_value(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, Mapping):
        return ", ".join(f"{k}={_render_value(x)}" for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_render_value(x) for x in v) + "]"
    return str(v)
