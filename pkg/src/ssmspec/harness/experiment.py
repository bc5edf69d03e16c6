"""
Instrumented training runs and the correlation experiment.

Each dataset run trains a fresh deep SSM on the dataset's training slice,
recording the K-spectral metric and the validation loss at every epoch
(epoch 0 = the untrained model), then scores the trained model on the shared
test inputs. Runs are independent: the seed hierarchy makes every record a
function of (config, repetition, dataset id) only, so the worker pool can
schedule them in any order.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..deep_ssm import (
    EpochOutcome,
    EpochRecord,
    init_model,
    measure_metric,
    predict_mse,
    train_epoch_with_metric,
)
from ..errors import ExperimentDiverged, NonFinite
from ..excitation import a_optimality, fim_fir_time
from ..kspectral import k_spectral_report
from ..sinks import dispatch_outputs
from .config import SEED_MODEL, SEED_SHUFFLE, ExperimentConfig, derive_seed
from .correlation import correlation_row, layer_correlation, summarize_rows
from .datasets import TEST_NAMES, IdentDataset, TestSignals, generate_dataset, make_test_inputs

logger = logging.getLogger(__name__)

BASELINES = ("kspectral", "valloss", "size", "aopt")

EpochCallback = Callable[[EpochRecord, EpochOutcome], None]


@dataclass
class RunRecord:
    dataset_id: int
    repetition: int
    n_components: int
    train_size: int
    status: str = "ok"
    error: Optional[str] = None
    aopt: Optional[float] = None
    r_bar_by_epoch: Dict[int, float] = field(default_factory=dict)
    val_loss_by_epoch: Dict[int, float] = field(default_factory=dict)
    per_layer_r: Dict[int, float] = field(default_factory=dict)
    r_bar_by_k: Dict[int, float] = field(default_factory=dict)
    test_mse: Dict[str, float] = field(default_factory=dict)
    final_train_loss: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "repetition": self.repetition,
            "n_components": self.n_components,
            "train_size": self.train_size,
            "status": self.status,
            "error": self.error,
            "aopt": self.aopt,
            "r_bar_by_epoch": {str(k): v for k, v in self.r_bar_by_epoch.items()},
            "val_loss_by_epoch": {str(k): v for k, v in self.val_loss_by_epoch.items()},
            "per_layer_r": {str(k): v for k, v in self.per_layer_r.items()},
            "r_bar_by_k": {str(k): v for k, v in self.r_bar_by_k.items()},
            "test_mse": dict(self.test_mse),
            "final_train_loss": self.final_train_loss,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RunRecord":
        def _int_keys(d: Optional[Dict[str, Any]]) -> Dict[int, float]:
            return {int(k): float(v) for k, v in (d or {}).items() if v is not None}

        return cls(
            dataset_id=int(doc["dataset_id"]),
            repetition=int(doc.get("repetition", 0)),
            n_components=int(doc["n_components"]),
            train_size=int(doc["train_size"]),
            status=str(doc.get("status", "ok")),
            error=doc.get("error"),
            aopt=doc.get("aopt"),
            r_bar_by_epoch=_int_keys(doc.get("r_bar_by_epoch")),
            val_loss_by_epoch=_int_keys(doc.get("val_loss_by_epoch")),
            per_layer_r=_int_keys(doc.get("per_layer_r")),
            r_bar_by_k=_int_keys(doc.get("r_bar_by_k")),
            test_mse={k: float(v) for k, v in (doc.get("test_mse") or {}).items() if v is not None},
            final_train_loss=doc.get("final_train_loss"),
        )

    def metric_value(self, metric: str, epoch: int) -> Optional[float]:
        """Value of a baseline for this run at `epoch` (K sweeps use 'kspectral@K')."""
        if metric == "kspectral":
            return self.r_bar_by_epoch.get(epoch)
        if metric == "valloss":
            return self.val_loss_by_epoch.get(epoch)
        if metric == "size":
            return float(self.train_size)
        if metric == "aopt":
            return self.aopt
        if metric.startswith("kspectral@"):
            return self.r_bar_by_k.get(int(metric.split("@", 1)[1]))
        raise KeyError(f"Unknown metric: {metric}")


def output_scale(cfg: ExperimentConfig, tests: TestSignals) -> float:
    if cfg.output_scale is None:
        return 1.0
    if cfg.output_scale == "auto":
        rms = float(np.sqrt(np.mean(tests.test_i[1] ** 2)))
        return rms if rms > 0.0 else 1.0
    return float(cfg.output_scale)


def train_on_dataset(
    cfg: ExperimentConfig,
    ds: IdentDataset,
    tests: TestSignals,
    scale: float = 1.0,
    repetition: int = 0,
    on_epoch: Optional[EpochCallback] = None,
) -> RunRecord:
    u_tr, y_tr = ds.train
    u_val, y_val = ds.val
    rec = RunRecord(
        dataset_id=ds.id,
        repetition=repetition,
        n_components=ds.n_components,
        train_size=int(u_tr.size),
        aopt=a_optimality(fim_fir_time(u_tr, cfg.model.d, 1.0)),
    )
    data = [(u_tr, y_tr / scale)]
    val = (u_val, y_val / scale)
    K = cfg.metric_k
    tcfg = cfg.train.model_copy(update={"seed": derive_seed(cfg.seed, repetition, ds.id, SEED_SHUFFLE)})
    model = init_model(cfg.model, derive_seed(cfg.seed, repetition, ds.id, SEED_MODEL))
    spectra = None
    try:
        snap = measure_metric(model, data, K, window=tcfg.window, keep_spectra=cfg.metric_epoch == 0)
        rec.r_bar_by_epoch[0] = snap.r_bar
        rec.val_loss_by_epoch[0] = predict_mse(model, *val)
        if cfg.metric_epoch == 0:
            rec.per_layer_r = dict(snap.per_layer_r)
            spectra = snap.spectra
        for epoch in range(1, tcfg.epochs + 1):
            keep = epoch == cfg.metric_epoch
            outcome = train_epoch_with_metric(
                model, data, tcfg.model_copy(update={"keep_spectra": keep}), epoch=epoch
            )
            model = outcome.model
            val_loss = predict_mse(model, *val)
            rec.r_bar_by_epoch[epoch] = outcome.r_bar
            rec.val_loss_by_epoch[epoch] = val_loss
            rec.final_train_loss = outcome.train_loss
            if keep:
                rec.per_layer_r = dict(outcome.per_layer_r)
                spectra = outcome.spectra
            logger.debug("dataset %d epoch %d loss=%.6g r_bar=%.4f", ds.id, epoch, outcome.train_loss, outcome.r_bar)
            if on_epoch is not None:
                on_epoch(
                    EpochRecord(epoch, outcome.train_loss, val_loss, outcome.r_bar, dict(outcome.per_layer_r), K),
                    outcome,
                )
        for name, (u, y) in tests.items():
            rec.test_mse[name] = predict_mse(model, u, y / scale)
        if spectra is not None:
            rec.r_bar_by_k = {k: k_spectral_report(spectra, k).r_bar for k in cfg.resolved_k_values()}
    except NonFinite as exc:
        rec.status = "diverged"
        rec.error = f"{exc.where}: {exc}"
        logger.warning("run repetition=%d dataset=%d diverged (%s)", repetition, ds.id, rec.error)
    return rec


def run_dataset(
    cfg: ExperimentConfig, dataset_id: int, repetition: int, tests: TestSignals, scale: float
) -> RunRecord:
    """Worker entry point: regenerates its own dataset from seeds."""
    return train_on_dataset(cfg, generate_dataset(cfg, dataset_id, repetition), tests, scale, repetition)


def _run_repetition(cfg: ExperimentConfig, repetition: int, workers: int) -> List[RunRecord]:
    tests = make_test_inputs(cfg, repetition)
    scale = output_scale(cfg, tests)
    ids = range(1, cfg.num_datasets + 1)
    if workers <= 1:
        records = [run_dataset(cfg, k, repetition, tests, scale) for k in ids]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_dataset, cfg, k, repetition, tests, scale) for k in ids]
            records = [f.result() for f in futures]
    return sorted(records, key=lambda r: r.dataset_id)


def collect_runs(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[List[RunRecord]]:
    """All dataset runs of every repetition; raises ExperimentDiverged past the tolerance."""
    n_workers = workers if workers is not None else cfg.workers
    runs: List[List[RunRecord]] = []
    for rep in range(cfg.repetitions):
        logger.info("repetition %d/%d: %d datasets", rep + 1, cfg.repetitions, cfg.num_datasets)
        runs.append(_run_repetition(cfg, rep, n_workers))
    total = sum(len(r) for r in runs)
    failed = sum(1 for r in runs for rec in r if not rec.ok)
    logger.info("%d/%d runs diverged", failed, total)
    if total and failed / total > cfg.max_divergence_fraction:
        raise ExperimentDiverged(failed, total, cfg.max_divergence_fraction)
    return runs


def correlation_table(
    records: Sequence[RunRecord],
    epoch: int,
    metrics: Sequence[str] = BASELINES,
    tests: Sequence[str] = TEST_NAMES,
) -> List[Dict[str, object]]:
    """rho of every metric against every test MSE over the runs that completed."""
    ok = [r for r in records if r.ok]
    rows: List[Dict[str, object]] = []
    for metric in metrics:
        pairs = [(r.metric_value(metric, epoch), r) for r in ok]
        pairs = [(v, r) for v, r in pairs if v is not None and math.isfinite(v)]
        values = [v for v, _ in pairs]
        mses = {t: [r.test_mse[t] for _, r in pairs] for t in tests}
        if len(values) < 2:
            row: Dict[str, object] = {"metric": metric}
            for t in tests:
                row[t] = None
                row[f"{t}_loo"] = None
            rows.append(row)
            continue
        rows.append(correlation_row(metric, values, mses))
    return rows


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: List[List[RunRecord]]
    tables: List[List[Dict[str, object]]]
    summary: List[Dict[str, object]]
    layer_tables: List[Dict[str, Dict[int, Optional[float]]]]

    def flat_records(self) -> List[Dict[str, Any]]:
        return [rec.to_dict() for rep in self.records for rec in rep]

    def summary_doc(self) -> Dict[str, Any]:
        return {
            "metric_epoch": self.config.metric_epoch,
            "K": self.config.metric_k,
            "runs": sum(len(r) for r in self.records),
            "diverged": sum(1 for r in self.records for rec in r if not rec.ok),
            "summary": self.summary,
            "per_repetition": self.tables,
            "layers": [
                {t: {str(k): v for k, v in layers.items()} for t, layers in rep.items()}
                for rep in self.layer_tables
            ],
            "config": self.config.model_dump(mode="json"),
        }


def summarize(cfg: ExperimentConfig, runs: List[List[RunRecord]], epoch: Optional[int] = None) -> ExperimentResult:
    e = cfg.metric_epoch if epoch is None else epoch
    tables = [correlation_table(rep, e) for rep in runs]
    layer_tables = []
    for rep in runs:
        ok = [r for r in rep if r.ok]
        layer_tables.append(
            {t: layer_correlation([r.per_layer_r for r in ok], [r.test_mse[t] for r in ok]) for t in TEST_NAMES}
        )
    return ExperimentResult(
        config=cfg,
        records=runs,
        tables=tables,
        summary=summarize_rows(tables, TEST_NAMES),
        layer_tables=layer_tables,
    )


def write_result(result: ExperimentResult, out_dir: str | Path) -> List[str]:
    """records.jsonl (one line per run, repetition then dataset order) and summary.json."""
    out = Path(out_dir)
    written = dispatch_outputs(result.flat_records(), {"sink": "jsonl", "path": str(out / "records.jsonl")}, name="records")
    written += dispatch_outputs(result.summary_doc(), {"sink": "json", "path": str(out / "summary.json")}, name="summary")
    written += dispatch_outputs(result.summary, {"sink": "csv", "path": str(out / "summary.csv")}, name="summary")
    return written


def run_experiment(
    cfg: ExperimentConfig, out_dir: Optional[str | Path] = None, workers: Optional[int] = None
) -> ExperimentResult:
    logger.info("experiment start: plant=%s N_d=%d T=%d", cfg.plant.value, cfg.num_datasets, cfg.length)
    result = summarize(cfg, collect_runs(cfg, workers))
    if out_dir is not None:
        write_result(result, out_dir)
    logger.info("experiment done")
    return result


def load_records(path: str | Path) -> List[RunRecord]:
    p = Path(path)
    if p.is_dir():
        p = p / "records.jsonl"
    lines = p.read_text(encoding="utf-8").splitlines()
    return [RunRecord.from_dict(json.loads(line)) for line in lines if line.strip()]


def group_by_repetition(records: Sequence[RunRecord]) -> List[List[RunRecord]]:
    reps = sorted({r.repetition for r in records})
    return [sorted((r for r in records if r.repetition == rep), key=lambda r: r.dataset_id) for rep in reps]


__all__ = [
    "BASELINES",
    "RunRecord",
    "ExperimentResult",
    "output_scale",
    "train_on_dataset",
    "run_dataset",
    "collect_runs",
    "correlation_table",
    "summarize",
    "write_result",
    "run_experiment",
    "load_records",
    "group_by_repetition",
]
