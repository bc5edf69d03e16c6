"""ssmspec: top-level package exports (no function definitions)."""

from .api import generate, load_config, register_output_sink, run, score_signal, validate_config

__version__ = "0.1.0"

__all__ = ["generate", "load_config", "register_output_sink", "run", "score_signal", "validate_config"]
