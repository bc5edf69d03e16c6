from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

from .registry import Payload, SinkContext, register_sink

NA = "N/A"


def _ensure_parent_dir(path: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)


def _rows(payload: Payload) -> List[Mapping[str, Any]]:
    if isinstance(payload, Mapping):
        return [payload]
    return list(payload)


def _jsonable(value: Any) -> Any:
    """NaN/inf become null; numpy scalars become Python numbers."""
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _cell(value: Any) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        return NA if not math.isfinite(value) else repr(value)
    if isinstance(value, (list, tuple, Mapping)):
        return json.dumps(_jsonable(value), sort_keys=True)
    return str(value)


def _columns(rows: Sequence[Mapping[str, Any]]) -> List[str]:
    cols: List[str] = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    return cols


def json_sink(payload: Payload, ctx: SinkContext, cfg: Mapping[str, Any]):
    """
    Write the payload as one JSON document.

    Config:
      - path: output path (overrides ctx.path)
      - indent: JSON indent (default 2)
    """
    path = str(cfg.get("path") or ctx.path or f"{ctx.name}.json")
    _ensure_parent_dir(path)
    doc = _jsonable(payload if isinstance(payload, Mapping) else list(payload))
    Path(path).write_text(json.dumps(doc, indent=cfg.get("indent", 2), sort_keys=True) + "\n", encoding="utf-8")
    return path


def jsonl_sink(payload: Payload, ctx: SinkContext, cfg: Mapping[str, Any]):
    """One JSON object per line, keys sorted. Config: path, append (default False)."""
    path = str(cfg.get("path") or ctx.path or f"{ctx.name}.jsonl")
    _ensure_parent_dir(path)
    mode = "a" if cfg.get("append") else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for row in _rows(payload):
            fh.write(json.dumps(_jsonable(row), sort_keys=True) + "\n")
    return path


def csv_sink(payload: Payload, ctx: SinkContext, cfg: Mapping[str, Any]):
    """Header row plus one line per row; missing values are written as N/A."""
    path = str(cfg.get("path") or ctx.path or f"{ctx.name}.csv")
    _ensure_parent_dir(path)
    rows = _rows(payload)
    cols = list(cfg.get("columns") or _columns(rows))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in cols])
    return path


def stdout_sink(payload: Payload, ctx: SinkContext, cfg: Mapping[str, Any]):
    """Print rows as aligned text columns."""
    rows = _rows(payload)
    cols = _columns(rows)
    cells: List[Dict[str, str]] = [{c: _cell(r.get(c)) for c in cols} for r in rows]
    widths = {c: max([len(c)] + [len(r[c]) for r in cells]) for c in cols}
    out = sys.stdout
    out.write("  ".join(c.ljust(widths[c]) for c in cols).rstrip() + "\n")
    for r in cells:
        out.write("  ".join(r[c].ljust(widths[c]) for c in cols).rstrip() + "\n")
    return None


# Register built-ins when module is imported via `ssmspec.sinks`
register_sink("json", json_sink)
register_sink("jsonl", jsonl_sink)
register_sink("csv", csv_sink)
register_sink("stdout", stdout_sink)
