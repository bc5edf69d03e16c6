from __future__ import annotations

"""
Bundled experiment presets.

Resolution order for a config argument:
- None: the file named by SSMSPEC_CONFIG if set, else the bundled `desk` preset
- "desk" | "full": bundled presets shipped in this package
- anything else: a path to a JSON file mirroring ExperimentConfig

Presets are validated through ssmspec.validator before use; invalid files fail
hard with ConfigError.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..errors import ConfigError

ENV_VAR = "SSMSPEC_CONFIG"
DEFAULT_PRESET = "desk"


def builtin_presets() -> List[str]:
    return sorted(p.stem for p in Path(__file__).parent.glob("*.json"))


def builtin_config_path(name: str) -> Path:
    """Return the path to a bundled preset by name (e.g., 'desk' or 'full')."""
    here = Path(__file__).parent
    key = name.strip().lower()
    if key in ("default", ""):
        key = DEFAULT_PRESET
    return here / f"{key}.json"


def _looks_like_path(arg: str) -> bool:
    return "/" in arg or "\\" in arg or arg.endswith(".json")


def resolve_config_path(arg: Optional[str] = None) -> Path:
    if not arg:
        env_path = os.environ.get(ENV_VAR)
        if env_path:
            candidate = Path(env_path)
            if not candidate.exists():
                raise FileNotFoundError(f"{ENV_VAR} points to a missing file: {candidate}")
            return candidate
        return builtin_config_path(DEFAULT_PRESET)
    arg = arg.strip()
    if not _looks_like_path(arg):
        bundled = builtin_config_path(arg)
        if bundled.exists():
            return bundled
    candidate = Path(arg)
    if not candidate.exists():
        raise FileNotFoundError(f"Config not found: {arg}")
    return candidate


def read_config_doc(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError([f"Invalid JSON in config file {p}: {e}"]) from e
    if not isinstance(data, dict):
        raise ConfigError([f"{p}: top level must be a JSON object"])
    return data


def load_config(arg: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
    """Resolve, read, merge overrides into, and validate an experiment config."""
    from ..validator import parse_config

    doc = read_config_doc(resolve_config_path(arg))
    if overrides:
        doc = _deep_merge(doc, overrides)
    return parse_config(doc)


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


__all__ = [
    "ENV_VAR",
    "DEFAULT_PRESET",
    "builtin_presets",
    "builtin_config_path",
    "resolve_config_path",
    "read_config_doc",
    "load_config",
]
