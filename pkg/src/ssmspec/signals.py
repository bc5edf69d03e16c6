"""
Time-series and spectral primitives.

A Signal is a 1-D float64 numpy array of finite samples (T >= 1). Spectra keep
all T DFT bins, symmetric duplicates included, because the K-spectral metric
ranks every bin of the real signal's spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EmptyInput, LengthMismatch, NonFinite, ZeroSignal

Signal = NDArray[np.float64]


def as_signal(x: ArrayLike, *, name: str = "signal") -> Signal:
    """Coerce to a finite, non-empty, 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        arr = arr.reshape(-1) if arr.ndim == 2 and 1 in arr.shape else arr
    if arr.ndim != 1:
        raise LengthMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInput(f"{name} must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or infinite samples", where=name)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT magnitudes |X_s| for s = 0..T-1 of a length-T signal."""

    magnitudes: NDArray[np.float64]
    source_length: int

    def __post_init__(self) -> None:
        if self.magnitudes.shape != (self.source_length,):
            raise LengthMismatch(
                f"spectrum holds {self.magnitudes.shape} bins for a length-{self.source_length} signal"
            )

    def __len__(self) -> int:
        return self.source_length


def normalize(x: ArrayLike) -> Signal:
    """Divide by the Euclidean norm; raises ZeroSignal on an all-zero signal."""
    sig = as_signal(x)
    norm = float(np.linalg.norm(sig))
    if norm == 0.0:
        raise ZeroSignal("cannot normalize a signal with zero Euclidean norm")
    return sig / norm


def dft_magnitudes(x: ArrayLike) -> Spectrum:
    sig = as_signal(x)
    return Spectrum(magnitudes=np.abs(np.fft.fft(sig)), source_length=sig.size)


def parseval_energy(spec: Spectrum) -> float:
    """Sum of squared magnitudes; equals T for the spectrum of a unit-norm signal."""
    return float(np.sum(spec.magnitudes**2))


def circular_shift(x: ArrayLike, k: int) -> Signal:
    return np.roll(as_signal(x), k)


def mse(a: ArrayLike, b: ArrayLike) -> float:
    """Mean of squared elementwise differences (averaged over time steps only)."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"cannot compare shapes {x.shape} and {y.shape}")
    if x.size == 0:
        raise EmptyInput("mse of empty signals")
    return float(np.mean((x - y) ** 2))


# ---------- Persistence ----------


def save_signal_csv(path: str | Path, x: ArrayLike) -> Path:
    """Single-column CSV, one sample per line, no header."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(p, as_signal(x), fmt="%.17g")
    return p


def load_signal_csv(path: str | Path) -> Signal:
    return as_signal(np.loadtxt(Path(path), dtype=np.float64, ndmin=1), name=str(path))


def save_npz(path: str | Path, **arrays: ArrayLike) -> Path:
    """Binary container of named arrays; returns the .npz path numpy writes."""
    p = Path(path)
    if p.suffix != ".npz":
        p = p.with_name(p.name + ".npz")
    p.parent.mkdir(parents=True, exist_ok=True)
    np.savez(p, **{k: np.asarray(v) for k, v in arrays.items()})
    return p


def load_npz(path: str | Path) -> Mapping[str, NDArray]:
    with np.load(Path(path)) as data:
        return {k: data[k] for k in data.files}


__all__ = [
    "Signal",
    "Spectrum",
    "as_signal",
    "normalize",
    "dft_magnitudes",
    "parseval_energy",
    "circular_shift",
    "mse",
    "save_signal_csv",
    "load_signal_csv",
    "save_npz",
    "load_npz",
]
