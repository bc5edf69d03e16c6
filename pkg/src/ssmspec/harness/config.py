"""
Experiment configuration.

JSON config files mirror ExperimentConfig field for field. Unknown keys are
ignored at load time (the validator reports them as warnings).
"""

from __future__ import annotations

from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..deep_ssm import DeepSsmConfig, TrainConfig
from ..kspectral import sweep_k_values
from ..plants import DEFAULT_RELATIVE_NOISE, PlantKind


class NoiseSettings(BaseModel):
    model_config = ConfigDict(extra="ignore")

    relative: float = Field(
        DEFAULT_RELATIVE_NOISE, ge=0.0, description="Noise std as a fraction of the noiseless output RMS"
    )
    sigma: Optional[float] = Field(
        None, ge=0.0, description="Absolute noise std; overrides `relative` when set"
    )


class TestInputSettings(BaseModel):
    model_config = ConfigDict(extra="ignore")

    interval: int = Field(20, ge=1, description="Hold length of the piecewise-constant test input II")
    components: Optional[int] = Field(
        None, ge=1, description="Component count of multisine test input I (default: i_max)"
    )


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="ignore")

    plant: PlantKind = Field(PlantKind.WIENER, description="Ground-truth system")
    num_datasets: int = Field(100, ge=2, description="Number of training datasets N_d")
    length: int = Field(2000, ge=16, description="Samples per dataset sequence T")
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0, description="Leading share of each sequence used for training")
    i_min: int = Field(1, ge=1, description="Component count of the poorest dataset")
    i_max: Optional[int] = Field(None, ge=1, description="Component count of the richest dataset (default: T/2)")
    target_norm: float = Field(100.0, gt=0.0, description="Euclidean norm of every input signal")
    integer_bins: bool = Field(False, description="Draw multisine frequencies on distinct integer bins")
    noise: NoiseSettings = Field(default_factory=NoiseSettings)
    test_inputs: TestInputSettings = Field(default_factory=TestInputSettings)
    model: DeepSsmConfig = Field(default_factory=DeepSsmConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    metric_epoch: int = Field(1, ge=0, description="Epoch whose metric values are correlated (0 = before training)")
    k_values: Optional[List[int]] = Field(None, description="K values for the K sweep (default: d/2, d, 2d, d_in)")
    seed: int = Field(0, description="Root seed of the experiment")
    repetitions: int = Field(3, ge=1, description="Independent repetitions for mean +- std")
    workers: int = Field(1, ge=1, description="Worker processes for dataset runs")
    max_divergence_fraction: float = Field(
        0.1, ge=0.0, le=1.0, description="Fail the experiment when more runs than this diverge"
    )
    output_scale: Union[Literal["auto"], float, None] = Field(
        "auto", description="Divide all targets by this constant; 'auto' = RMS of the noiseless test-I output"
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> "ExperimentConfig":
        if self.metric_epoch > self.train.epochs:
            raise ValueError(f"metric_epoch {self.metric_epoch} exceeds train.epochs {self.train.epochs}")
        if self.i_min > self.resolved_i_max:
            raise ValueError(f"i_min {self.i_min} exceeds i_max {self.resolved_i_max}")
        if self.train_length < 2 or self.length - self.train_length < 2:
            raise ValueError("train_fraction leaves fewer than 2 samples for training or validation")
        if isinstance(self.output_scale, float) and not self.output_scale > 0.0:
            raise ValueError("output_scale must be > 0, 'auto' or null")
        return self

    @property
    def resolved_i_max(self) -> int:
        return self.i_max if self.i_max is not None else self.length // 2

    @property
    def train_length(self) -> int:
        return int(self.length * self.train_fraction)

    @property
    def test_components(self) -> int:
        return self.test_inputs.components or self.resolved_i_max

    @property
    def metric_k(self) -> int:
        return self.train.K if self.train.K is not None else self.model.d

    def resolved_k_values(self) -> List[int]:
        return sorted(set(self.k_values)) if self.k_values else sweep_k_values(self.model)

    def component_count(self, dataset_id: int) -> int:
        """Dataset ids 1..N_d map linearly onto [i_min, i_max]."""
        lo, hi, n = self.i_min, self.resolved_i_max, self.num_datasets
        return int(lo + round((dataset_id - 1) * (hi - lo) / (n - 1)))


def derive_seed(*keys: int) -> int:
    """Child seed of the experiment -> repetition -> dataset -> purpose hierarchy."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# purpose tags of derive_seed
SEED_INPUT = 1
SEED_NOISE = 2
SEED_MODEL = 3
SEED_SHUFFLE = 4
SEED_TEST_I = 5
SEED_TEST_II = 6


__all__ = [
    "NoiseSettings",
    "TestInputSettings",
    "ExperimentConfig",
    "derive_seed",
    "SEED_INPUT",
    "SEED_NOISE",
    "SEED_MODEL",
    "SEED_SHUFFLE",
    "SEED_TEST_I",
    "SEED_TEST_II",
]
