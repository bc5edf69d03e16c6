"""
Pearson correlation between per-dataset metric values and test MSE.

A baseline that is constant across datasets (e.g. the dataset size when every
sequence has the same length) has no correlation; it is reported as None here
and rendered as "N/A" by the CSV sink.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import pearsonr

from ..errors import ConstantInput, LengthMismatch


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"pearson needs two equal-length sequences, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise LengthMismatch("pearson needs at least 2 points")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ConstantInput("correlation is undefined for a constant sequence")
    r, _ = pearsonr(x, y)
    return float(np.clip(r, -1.0, 1.0))


def pearson_or_none(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    try:
        return pearson(xs, ys)
    except ConstantInput:
        return None


def leave_one_out(xs: Sequence[float], ys: Sequence[float]) -> Optional[Tuple[float, float]]:
    """(min, max) of rho over every subset missing one point; None below 3 points or if all are undefined."""
    n = len(xs)
    if n != len(ys):
        raise LengthMismatch(f"got {n} and {len(ys)} values")
    if n < 3:
        return None
    values = []
    for k in range(n):
        r = pearson_or_none([x for j, x in enumerate(xs) if j != k], [y for j, y in enumerate(ys) if j != k])
        if r is not None:
            values.append(r)
    if not values:
        return None
    return min(values), max(values)


def mean_std(values: Iterable[Optional[float]]) -> Optional[Tuple[float, float]]:
    """Mean and population std over the defined values; None when none are defined."""
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return None
    arr = np.asarray(vals)
    return float(arr.mean()), float(arr.std())


def correlation_row(
    metric: str, values: Sequence[float], mses: Dict[str, Sequence[float]]
) -> Dict[str, object]:
    """One table row: rho of `values` against each test MSE column plus its leave-one-out range."""
    row: Dict[str, object] = {"metric": metric}
    for test, col in mses.items():
        row[test] = pearson_or_none(values, col)
        loo = leave_one_out(values, col)
        row[f"{test}_loo"] = list(loo) if loo is not None else None
    return row


def layer_correlation(
    per_layer: Sequence[Dict[int, float]], mses: Sequence[float]
) -> Dict[int, Optional[float]]:
    """rho(R_layer, MSE) per SSM layer; datasets missing a layer's value are left out of that layer."""
    layers = sorted({k for d in per_layer for k in d})
    out: Dict[int, Optional[float]] = {}
    for layer in layers:
        pairs = [(d[layer], m) for d, m in zip(per_layer, mses) if layer in d]
        if len(pairs) < 2:
            out[layer] = None
            continue
        xs, ys = zip(*pairs)
        out[layer] = pearson_or_none(list(xs), list(ys))
    return out


def summarize_rows(tables: Sequence[List[Dict[str, object]]], tests: Sequence[str]) -> List[Dict[str, object]]:
    """Mean and std per (metric, test) across repetitions."""
    if not tables:
        return []
    out: List[Dict[str, object]] = []
    for idx, first in enumerate(tables[0]):
        row: Dict[str, object] = {"metric": first["metric"]}
        for test in tests:
            stats = mean_std(t[idx].get(test) for t in tables)  # type: ignore[misc]
            row[f"{test}_mean"] = stats[0] if stats else None
            row[f"{test}_std"] = stats[1] if stats else None
        out.append(row)
    return out


__all__ = [
    "pearson",
    "pearson_or_none",
    "leave_one_out",
    "mean_std",
    "correlation_row",
    "layer_correlation",
    "summarize_rows",
]
