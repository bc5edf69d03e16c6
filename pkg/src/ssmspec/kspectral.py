"""
K-spectral metric.

For a unit-norm signal of length T, R(K) is the sum of its K largest DFT
magnitudes. By Parseval the magnitudes have squared sum T, so R(K) <= sqrt(T K)
with equality exactly when K bins share all the energy equally. A deep SSM is
scored by averaging R over every captured pre-SSM channel and training sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import BadK, EmptyInput
from .signals import Spectrum

if TYPE_CHECKING:
    from .deep_ssm import DeepSsmConfig


def _check_k(K: int, T: int) -> None:
    if not isinstance(K, (int, np.integer)) or K < 1 or K > T:
        raise BadK(f"K must be an integer in [1, {T}], got {K!r}")


def topk_indices(spec: Spectrum, K: int) -> NDArray[np.intp]:
    """Bins of the K largest magnitudes, descending; ties go to the lower bin."""
    _check_k(K, spec.source_length)
    return np.argsort(-spec.magnitudes, kind="stable")[:K]


def k_spectral(spec: Spectrum, K: int) -> float:
    """Sum of the K largest magnitudes of a unit-norm signal's spectrum."""
    return float(spec.magnitudes[topk_indices(spec, K)].sum())


def k_spectral_max(T: int, K: int) -> float:
    _check_k(K, T)
    return math.sqrt(T * K)


def aggregate(values: Iterable[float]) -> float:
    """Mean of per-channel R values, accumulated as a running mean r <- r + (x - r) / n."""
    mean = 0.0
    n = 0
    for x in values:
        n += 1
        mean += (float(x) - mean) / n
    if n == 0:
        raise EmptyInput("cannot aggregate an empty set of K-spectral values")
    return mean


def default_k(cfg: "DeepSsmConfig") -> int:
    """K = d: a SISO SSM with d states is matched by d frequency components."""
    return int(cfg.d)


def sweep_k_values(cfg: "DeepSsmConfig") -> List[int]:
    """Distinct K from {d/2, d, 2d, d_in}, ascending."""
    return sorted({max(cfg.d // 2, 1), cfg.d, 2 * cfg.d, cfg.d_in})


@dataclass
class KSpectralReport:
    """Per-channel values per sequence, their channel means, and the dataset mean."""

    K: int
    T: int
    per_channel: List[List[float]] = field(default_factory=list)
    per_sequence: List[float] = field(default_factory=list)
    r_bar: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "T": self.T,
            "per_channel": self.per_channel,
            "per_sequence": self.per_sequence,
            "r_bar": self.r_bar,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "KSpectralReport":
        return cls(
            K=int(doc["K"]),
            T=int(doc["T"]),
            per_channel=[list(map(float, row)) for row in doc.get("per_channel", [])],
            per_sequence=list(map(float, doc.get("per_sequence", []))),
            r_bar=float(doc.get("r_bar", 0.0)),
        )


def sequence_metric(spectra: Sequence[Spectrum], K: int) -> tuple[float, List[float]]:
    """Channel-mean R for one sequence; 0.0 when every channel was skipped."""
    values = [k_spectral(s, K) for s in spectra]
    return (aggregate(values) if values else 0.0), values


def k_spectral_report(spectra_per_sequence: Sequence[Sequence[Spectrum]], K: int) -> KSpectralReport:
    """Dataset-level metric: mean of the per-sequence values over sequences with a scored channel."""
    if not spectra_per_sequence:
        raise EmptyInput("no sequences to score")
    T = next((s.source_length for seq in spectra_per_sequence for s in seq), 0)
    report = KSpectralReport(K=K, T=T)
    total = 0.0
    scored = 0
    for spectra in spectra_per_sequence:
        r_n, values = sequence_metric(spectra, K)
        report.per_channel.append(values)
        report.per_sequence.append(r_n)
        if values:
            total += r_n
            scored += 1
    report.r_bar = total / scored if scored else 0.0
    return report


__all__ = [
    "topk_indices",
    "k_spectral",
    "k_spectral_max",
    "aggregate",
    "default_k",
    "sweep_k_values",
    "KSpectralReport",
    "sequence_metric",
    "k_spectral_report",
]
