from __future__ import annotations

"""
Experiment config validation.

validate_config(doc) returns (errors, warnings) as friendly strings, mirroring
the field paths of the JSON document. parse_config(doc) raises ConfigError when
errors are present and returns the parsed ExperimentConfig otherwise.
"""

import os
from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ValidationError

from .deep_ssm import DeepSsmConfig, TrainConfig, window_slices
from .errors import ConfigError
from .harness.config import ExperimentConfig, NoiseSettings, TestInputSettings

# Friendly messages for the constraints users hit most often
_FRIENDLY: Dict[Tuple[str, str], str] = {
    ("num_datasets", "greater_than_equal"): "correlation needs at least 2 datasets",
    ("train.lr", "greater_than_equal"): "learning rate must be >= 0",
    ("train.K", "greater_than_equal"): "K must be at least 1",
    ("plant", "enum"): "plant must be 'wiener' or 'hammerstein'",
    ("train_fraction", "greater_than"): "train_fraction must lie strictly between 0 and 1",
    ("train_fraction", "less_than"): "train_fraction must lie strictly between 0 and 1",
}

_SECTIONS: Dict[str, type[BaseModel]] = {
    "noise": NoiseSettings,
    "test_inputs": TestInputSettings,
    "model": DeepSsmConfig,
    "train": TrainConfig,
}


def _unknown_keys(doc: Dict[str, Any]) -> List[str]:
    warnings: List[str] = []
    for k in doc:
        if k not in ExperimentConfig.model_fields:
            warnings.append(f"{k}: unknown key is ignored")
    for section, model in _SECTIONS.items():
        sub = doc.get(section)
        if isinstance(sub, dict):
            for k in sub:
                if k not in model.model_fields:
                    warnings.append(f"{section}.{k}: unknown key is ignored")
    return warnings


def _remap(ve: ValidationError) -> List[str]:
    errors: List[str] = []
    for err in ve.errors():
        loc = ".".join(str(x) for x in err.get("loc", ()))
        msg = str(err.get("msg", "invalid"))
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, ") :]
        friendly = _FRIENDLY.get((loc, str(err.get("type", ""))))
        if friendly:
            errors.append(f"{loc}: {friendly}")
        elif loc:
            errors.append(f"{loc}: {msg}")
        else:
            errors.append(msg)
    return errors


def _cross_checks(cfg: ExperimentConfig, errors: List[str], warnings: List[str]) -> None:
    seq_len = min(w.stop - w.start for w in window_slices(cfg.train_length, cfg.train.window))
    for K in [cfg.metric_k, *cfg.resolved_k_values()]:
        if K > seq_len:
            errors.append(f"K={K} exceeds the captured signal length {seq_len}")
    if cfg.train.K is not None and cfg.train.K != cfg.model.d:
        warnings.append(f"train.K={cfg.train.K} differs from the default K = d = {cfg.model.d}")
    if cfg.integer_bins and cfg.resolved_i_max > (cfg.length + 1) // 2 - 1:
        errors.append(
            f"i_max: integer_bins allows at most {(cfg.length + 1) // 2 - 1} components for length {cfg.length}"
        )
    if cfg.integer_bins and cfg.test_components > (cfg.length + 1) // 2 - 1:
        errors.append("test_inputs.components: too many components for integer bins")
    if cfg.num_datasets < 10:
        warnings.append(f"num_datasets={cfg.num_datasets}: correlations over so few datasets are noisy")
    cpus = os.cpu_count() or 1
    if cfg.workers > cpus:
        warnings.append(f"workers={cfg.workers} exceeds the {cpus} available CPUs")


def validate_config(doc: Dict[str, Any]) -> Tuple[List[str], List[str]]:
    errors: List[str] = []
    warnings: List[str] = []
    if not isinstance(doc, dict):
        return ["config must be a JSON object"], warnings
    warnings.extend(_unknown_keys(doc))
    try:
        cfg = ExperimentConfig.model_validate(doc)
    except ValidationError as ve:
        errors.extend(_remap(ve))
        return errors, warnings
    _cross_checks(cfg, errors, warnings)
    return errors, warnings


def parse_config(doc: Dict[str, Any]) -> ExperimentConfig:
    errors, _ = validate_config(doc)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig.model_validate(doc)


__all__ = ["validate_config", "parse_config"]
