import json

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_doc() -> dict:
    """A config small enough to run the whole harness in a few seconds."""
    return {
        "plant": "wiener",
        "num_datasets": 3,
        "length": 64,
        "i_min": 1,
        "i_max": 8,
        "target_norm": 10.0,
        "model": {"d": 2, "d_in": 2},
        "train": {"lr": 0.001, "epochs": 2},
        "repetitions": 1,
        "max_divergence_fraction": 1.0,
    }


@pytest.fixture
def tiny_config_file(tmp_path, tiny_doc):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(tiny_doc), encoding="utf-8")
    return p
