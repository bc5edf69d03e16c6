"""
Identification datasets and the shared test inputs.

Dataset k (1-based) carries a multisine with config.component_count(k)
components, the plant's noisy response, and enough metadata to rebuild both
bit-exactly. On disk: dataset_<id>.csv (header `u,y`) plus a dataset_<id>.json
sidecar.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray

from ..excitation import MultisineSpec, gen_multisine, gen_piecewise_constant, regenerate_multisine
from ..plants import NoiseConfig, PlantKind, noiseless_rms, plant_response
from .config import SEED_INPUT, SEED_NOISE, SEED_TEST_I, SEED_TEST_II, ExperimentConfig, derive_seed

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class IdentDataset:
    id: int
    u: NDArray[np.float64]
    y: NDArray[np.float64]
    plant: PlantKind
    spec: MultisineSpec
    noise: NoiseConfig
    train_end: int

    @property
    def train(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.u[: self.train_end], self.y[: self.train_end]

    @property
    def val(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.u[self.train_end :], self.y[self.train_end :]

    @property
    def n_components(self) -> int:
        return self.spec.i

    def meta(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "plant": self.plant.value,
            "multisine": self.spec.to_dict(),
            "noise": self.noise.to_dict(),
            "split": {"train": [0, self.train_end], "val": [self.train_end, int(self.u.size)]},
        }


@dataclass(eq=False)
class TestSignals:
    """Noiseless (u, y) pairs of test input I (rich multisine) and II (piecewise constant)."""

    __test__ = False

    test_i: Tuple[NDArray[np.float64], NDArray[np.float64]]
    test_ii: Tuple[NDArray[np.float64], NDArray[np.float64]]

    def items(self):
        return (("test_I", self.test_i), ("test_II", self.test_ii))


TEST_NAMES = ("test_I", "test_II")


def generate_dataset(cfg: ExperimentConfig, dataset_id: int, repetition: int = 0) -> IdentDataset:
    i = cfg.component_count(dataset_id)
    u, spec = gen_multisine(
        i,
        cfg.length,
        cfg.target_norm,
        seed=derive_seed(cfg.seed, repetition, dataset_id, SEED_INPUT),
        integer_bins=cfg.integer_bins,
    )
    noise_seed = derive_seed(cfg.seed, repetition, dataset_id, SEED_NOISE)
    if cfg.noise.sigma is not None:
        noise = NoiseConfig(sigma=cfg.noise.sigma, seed=noise_seed)
    else:
        noise = NoiseConfig.relative(cfg.noise.relative, noiseless_rms(cfg.plant, u), seed=noise_seed)
    y = plant_response(cfg.plant, u, noise)
    return IdentDataset(
        id=dataset_id, u=u, y=y, plant=PlantKind(cfg.plant), spec=spec, noise=noise, train_end=cfg.train_length
    )


def generate_ident_suite(cfg: ExperimentConfig, repetition: int = 0) -> List[IdentDataset]:
    suite = [generate_dataset(cfg, k, repetition) for k in range(1, cfg.num_datasets + 1)]
    logger.info("generated %d %s datasets of length %d", len(suite), PlantKind(cfg.plant).value, cfg.length)
    return suite


def make_test_inputs(cfg: ExperimentConfig, repetition: int = 0) -> TestSignals:
    u1, _ = gen_multisine(
        cfg.test_components,
        cfg.length,
        cfg.target_norm,
        seed=derive_seed(cfg.seed, repetition, 0, SEED_TEST_I),
        integer_bins=cfg.integer_bins,
    )
    u2 = gen_piecewise_constant(
        cfg.length,
        cfg.test_inputs.interval,
        cfg.target_norm,
        seed=derive_seed(cfg.seed, repetition, 0, SEED_TEST_II),
    )
    return TestSignals(
        test_i=(u1, plant_response(cfg.plant, u1)),
        test_ii=(u2, plant_response(cfg.plant, u2)),
    )


def regenerate_dataset(meta: Dict[str, Any]) -> IdentDataset:
    """Rebuild a dataset from its sidecar alone."""
    spec = MultisineSpec.from_dict(meta["multisine"])
    noise = NoiseConfig(sigma=float(meta["noise"]["sigma"]), seed=int(meta["noise"]["seed"]))
    kind = PlantKind(meta["plant"])
    u = regenerate_multisine(spec)
    return IdentDataset(
        id=int(meta["id"]),
        u=u,
        y=plant_response(kind, u, noise),
        plant=kind,
        spec=spec,
        noise=noise,
        train_end=int(meta["split"]["train"][1]),
    )


# ---------- Persistence ----------


def dataset_paths(out_dir: str | Path, dataset_id: int) -> Tuple[Path, Path]:
    base = Path(out_dir)
    return base / f"dataset_{dataset_id}.csv", base / f"dataset_{dataset_id}.json"


def save_dataset(out_dir: str | Path, ds: IdentDataset) -> Path:
    csv_path, meta_path = dataset_paths(out_dir, ds.id)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(csv_path, np.column_stack([ds.u, ds.y]), fmt="%.17g", delimiter=",", header="u,y", comments="")
    meta_path.write_text(json.dumps(ds.meta(), indent=2, sort_keys=True), encoding="utf-8")
    return csv_path


def load_dataset(out_dir: str | Path, dataset_id: int) -> IdentDataset:
    """Read samples from the CSV and metadata from the sidecar; nothing is regenerated."""
    csv_path, meta_path = dataset_paths(out_dir, dataset_id)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    return IdentDataset(
        id=int(meta["id"]),
        u=data[:, 0].copy(),
        y=data[:, 1].copy(),
        plant=PlantKind(meta["plant"]),
        spec=MultisineSpec.from_dict(meta["multisine"]),
        noise=NoiseConfig(sigma=float(meta["noise"]["sigma"]), seed=int(meta["noise"]["seed"])),
        train_end=int(meta["split"]["train"][1]),
    )


__all__ = [
    "IdentDataset",
    "TestSignals",
    "TEST_NAMES",
    "generate_dataset",
    "generate_ident_suite",
    "make_test_inputs",
    "regenerate_dataset",
    "dataset_paths",
    "save_dataset",
    "load_dataset",
]
