"""
Epoch and K sweeps over one shared set of training runs.

Every run records R at each epoch and, at the metric epoch, the captured
spectra's metric for every K of the sweep, so both curves come from the same
collect_runs pass.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence

from .config import ExperimentConfig
from .correlation import mean_std
from .datasets import TEST_NAMES
from .experiment import RunRecord, collect_runs, correlation_table

logger = logging.getLogger(__name__)

SweepCurve = Dict[int, Dict[str, Optional[float]]]


def _curve_row(tables: Sequence[List[Dict[str, object]]], absolute: bool) -> Dict[str, Optional[float]]:
    row: Dict[str, Optional[float]] = {}
    for test in TEST_NAMES:
        values = [t[0].get(test) for t in tables]
        if absolute:
            values = [abs(v) if v is not None else None for v in values]  # type: ignore[arg-type]
        stats = mean_std(values)  # type: ignore[arg-type]
        row[test] = stats[0] if stats else None
        row[f"{test}_std"] = stats[1] if stats else None
    return row


def epoch_sweep(cfg: ExperimentConfig, runs: Optional[List[List[RunRecord]]] = None) -> SweepCurve:
    """rho(R at epoch e, test MSE) for e = 0..epochs, mean over repetitions."""
    if cfg.train.epochs < 2:
        raise ValueError("epoch sweep needs train.epochs >= 2")
    runs = runs if runs is not None else collect_runs(cfg)
    curve: SweepCurve = {}
    for epoch in range(0, cfg.train.epochs + 1):
        tables = [correlation_table(rep, epoch, metrics=("kspectral",)) for rep in runs]
        curve[epoch] = _curve_row(tables, absolute=False)
    return curve


def k_sweep(cfg: ExperimentConfig, runs: Optional[List[List[RunRecord]]] = None) -> SweepCurve:
    """|rho| per K at the metric epoch, recomputed offline from the captured spectra."""
    runs = runs if runs is not None else collect_runs(cfg)
    curve: SweepCurve = {}
    for K in cfg.resolved_k_values():
        tables = [correlation_table(rep, cfg.metric_epoch, metrics=(f"kspectral@{K}",)) for rep in runs]
        for test in TEST_NAMES:
            signs = [t[0].get(test) for t in tables]
            logger.info("K=%d %s signed rho: %s", K, test, signs)
        curve[K] = _curve_row(tables, absolute=True)
    return curve


def curve_rows(curve: SweepCurve, key_name: str) -> List[Dict[str, object]]:
    """Plot-ready rows: one per epoch or K."""
    return [{key_name: key, **values} for key, values in sorted(curve.items())]


__all__ = ["SweepCurve", "epoch_sweep", "k_sweep", "curve_rows"]
