"""
High-level Python API for ssmspec.

This module provides a clean import surface for library users:
- load_config(arg=None, overrides=None) -> ExperimentConfig
- validate_config(doc) -> (errors, warnings)
- generate(cfg, out_dir=None) -> list[IdentDataset]
- run(cfg, out_dir=None, workers=None) -> ExperimentResult
- score_signal(u, K) -> float
- register_output_sink(name, fn) -> None
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, List, Mapping, Optional, Union

from numpy.typing import ArrayLike

from .harness.config import ExperimentConfig
from .harness.datasets import IdentDataset, generate_ident_suite, save_dataset
from .harness.experiment import ExperimentResult, run_experiment
from .kspectral import k_spectral
from .presets import load_config
from .signals import dft_magnitudes, normalize
from .sinks import dispatch_outputs, register_sink as register_output_sink
from .validator import parse_config, validate_config

ConfigLike = Union[ExperimentConfig, Mapping[str, Any], str, None]


def as_config(cfg: ConfigLike) -> ExperimentConfig:
    """Accept a parsed config, a JSON-like dict, a preset name or a path."""
    if isinstance(cfg, ExperimentConfig):
        return cfg
    if isinstance(cfg, Mapping):
        return parse_config(dict(cfg))
    return load_config(cfg)


def generate(cfg: ConfigLike = None, out_dir: Optional[str | Path] = None, repetition: int = 0) -> List[IdentDataset]:
    """Generate the identification datasets; persist them when out_dir is given."""
    config = as_config(cfg)
    suite = generate_ident_suite(config, repetition)
    if out_dir is not None:
        for ds in suite:
            save_dataset(out_dir, ds)
    return suite


def run(cfg: ConfigLike = None, out_dir: Optional[str | Path] = None, workers: Optional[int] = None) -> ExperimentResult:
    return run_experiment(as_config(cfg), out_dir=out_dir, workers=workers)


def score_signal(u: ArrayLike, K: int) -> float:
    """K-spectral metric of a single signal (normalized internally)."""
    return k_spectral(dft_magnitudes(normalize(u)), K)


__all__ = [
    "ConfigLike",
    "as_config",
    "load_config",
    "validate_config",
    "generate",
    "run",
    "score_signal",
    "dispatch_outputs",
    "register_output_sink",
]
