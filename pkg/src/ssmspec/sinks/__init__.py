from __future__ import annotations

"""
Output sinks for result tables.

Every table the harness produces (run records, correlation tables, sweep
curves) leaves through `dispatch_outputs`, so extra destinations can be added
without touching the harness.

Usage patterns:
- Internal: the CLI dispatches each table to the sinks named by the output
  spec, inferring the sink from the file extension when none is given
  (.json -> json, .jsonl -> jsonl, .csv -> csv, "-" -> stdout).
- Third-party: packages expose sinks through the `ssmspec.output_sinks`
  entry-point group.
"""

from .registry import (
    Payload,
    SinkContext,
    SinkFn,
    available_sinks,
    dispatch_outputs,
    get_sink,
    register_sink,
)

# Ensure builtins are registered on import
from . import builtin  # noqa: F401
from .builtin import NA

# Optional: load external sinks via entry points
try:
    from importlib.metadata import entry_points

    for ep in entry_points(group="ssmspec.output_sinks"):
        try:
            obj = ep.load()
            if callable(obj):
                register_sink(ep.name, obj)  # type: ignore[arg-type]
            elif isinstance(obj, dict) and "name" in obj and "fn" in obj:
                register_sink(str(obj["name"]), obj["fn"])
        except Exception:
            # Skip faulty entries
            continue
except Exception:
    pass

__all__ = [
    "NA",
    "Payload",
    "SinkContext",
    "SinkFn",
    "available_sinks",
    "dispatch_outputs",
    "get_sink",
    "register_sink",
]
