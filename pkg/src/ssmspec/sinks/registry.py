from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Mapping, MutableMapping, Optional, Sequence, Union

# A row table (list of flat dicts) or a single JSON document.
Payload = Union[Sequence[Mapping[str, Any]], Mapping[str, Any]]

# A sink is a callable taking the payload, a SinkContext and a free-form config dict.
SinkFn = Callable[[Payload, "SinkContext", Mapping[str, Any]], Any]


@dataclass
class SinkContext:
    """
    Context passed to output sinks.

    - path: preferred destination for file-like sinks (may be None)
    - name: logical name of the payload ("records", "correlation", ...)
    - meta: free-form metadata (config snapshot, repetition, ...)
    """

    path: Optional[str]
    name: str
    meta: Mapping[str, Any]


_REGISTRY: MutableMapping[str, SinkFn] = {}


def register_sink(name: str, fn: SinkFn) -> None:
    key = name.strip().lower()
    if not key:
        raise ValueError("Sink name must be non-empty")
    _REGISTRY[key] = fn


def get_sink(name: str) -> SinkFn:
    key = name.strip().lower()
    if key not in _REGISTRY:
        raise KeyError(f"Unknown sink: {name}")
    return _REGISTRY[key]


def available_sinks() -> List[str]:
    return sorted(_REGISTRY)


def _sink_for_path(path: Optional[str]) -> str:
    if not path or path == "-":
        return "stdout"
    p = path.lower()
    if p.endswith(".jsonl"):
        return "jsonl"
    if p.endswith(".csv"):
        return "csv"
    return "json"


def _normalize_outputs_spec(
    spec: Union[str, Mapping[str, Any], Iterable[Mapping[str, Any]], None],
    default_path: Optional[str],
) -> List[Mapping[str, Any]]:
    """
    Normalize various spec shapes into a list of { sink, ... } dicts.

    Accepted forms:
      - None -> sink inferred from default_path (stdout when there is none)
      - "out/table.csv" -> sink inferred from the extension
      - { "sink": "csv", "path": ... }
      - [ { "sink": "json", ... }, { "sink": "csv", ... } ]
    """
    if spec is None:
        return [{"sink": _sink_for_path(default_path), "path": default_path}]
    if isinstance(spec, str):
        return [{"sink": _sink_for_path(spec), "path": spec}]
    if isinstance(spec, Mapping):
        spec = [spec]
    out: List[Mapping[str, Any]] = []
    for item in spec:
        if isinstance(item, Mapping):
            if "sink" not in item:
                out.append({"sink": _sink_for_path(item.get("path") or default_path), **item})
            else:
                out.append(item)
    return out


def dispatch_outputs(
    payload: Payload,
    outputs_spec: Union[str, Mapping[str, Any], Iterable[Mapping[str, Any]], None],
    *,
    default_path: Optional[str] = None,
    name: str = "table",
    meta: Optional[Mapping[str, Any]] = None,
) -> List[Any]:
    """
    Send a payload to one or more sinks.

    Returns a list of sink results. File sinks return the path they wrote to.
    """
    results: List[Any] = []
    for item in _normalize_outputs_spec(outputs_spec, default_path):
        sink = str(item.get("sink", "json")).strip().lower()
        path = item.get("path") or default_path
        ctx = SinkContext(path=str(path) if path else None, name=name, meta=dict(meta or {}))
        cfg: Dict[str, Any] = {k: v for k, v in item.items() if k != "sink"}
        results.append(get_sink(sink)(payload, ctx, cfg))
    return results
