"""
Ground-truth nonlinear plants for identification experiments.

Wiener (control valve): second-order linear block followed by the static
nonlinearity v / sqrt(0.10 + 0.90 v^2). Hammerstein: cubic polynomial followed
by an 8-tap FIR. Both start from zero memory and add Gaussian observation noise
drawn from a seeded stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike
from scipy.signal import lfilter

from .signals import Signal, as_signal
from .ssm_core import TransferFunction, simulate_transfer

# G(q) = (0.1044 q + 0.0883) / (q^2 - 1.4138 q + 0.6065), descending powers of q
WIENER_NUMERATOR = (0.1044, 0.0883)
WIENER_DENOMINATOR = (1.0, -1.4138, 0.6065)
# v = p_1 u + p_2 u^2 + p_3 u^3
HAMMERSTEIN_POLY = (1.0, 3.0, 2.0)
# y_t = sum_{i=1}^{8} theta_i v_{t-i}
HAMMERSTEIN_TAPS = (1.0, 2.0, 0.3, 4.0, 1.0, 1.0, 1.0, 0.5)

DEFAULT_RELATIVE_NOISE = 0.01


class PlantKind(str, Enum):
    WIENER = "wiener"
    HAMMERSTEIN = "hammerstein"


@dataclass(frozen=True)
class NoiseConfig:
    """Additive N(0, sigma^2) observation noise; sigma = 0 disables it."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.sigma >= 0.0 and np.isfinite(self.sigma)):
            raise ValueError(f"noise sigma must be finite and >= 0, got {self.sigma}")

    @classmethod
    def relative(cls, level: float, reference_rms: float, seed: int = 0) -> "NoiseConfig":
        """sigma = level * RMS of the noiseless output."""
        return cls(sigma=float(level) * float(reference_rms), seed=seed)

    def sample(self, n: int) -> Signal:
        if self.sigma == 0.0:
            return np.zeros(n)
        return np.random.default_rng(self.seed).normal(0.0, self.sigma, size=n)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "seed": self.seed}


WIENER_TF = TransferFunction(numerator=np.array(WIENER_NUMERATOR), denominator=np.array(WIENER_DENOMINATOR))


def wiener_response(u: ArrayLike, noise: NoiseConfig = NoiseConfig()) -> Signal:
    sig = as_signal(u, name="u")
    v = simulate_transfer(WIENER_TF, sig)
    return v / np.sqrt(0.10 + 0.90 * v**2) + noise.sample(sig.size)


def hammerstein_response(u: ArrayLike, noise: NoiseConfig = NoiseConfig()) -> Signal:
    sig = as_signal(u, name="u")
    p1, p2, p3 = HAMMERSTEIN_POLY
    v = p1 * sig + p2 * sig**2 + p3 * sig**3
    y = lfilter((0.0,) + HAMMERSTEIN_TAPS, [1.0], v)
    return y + noise.sample(sig.size)


def plant_response(kind: PlantKind | str, u: ArrayLike, noise: NoiseConfig = NoiseConfig()) -> Signal:
    k = PlantKind(kind)
    if k is PlantKind.WIENER:
        return wiener_response(u, noise)
    return hammerstein_response(u, noise)


def noiseless_rms(kind: PlantKind | str, u: ArrayLike) -> float:
    y = plant_response(kind, u)
    return float(np.sqrt(np.mean(y**2)))


__all__ = [
    "PlantKind",
    "NoiseConfig",
    "WIENER_NUMERATOR",
    "WIENER_DENOMINATOR",
    "HAMMERSTEIN_POLY",
    "HAMMERSTEIN_TAPS",
    "DEFAULT_RELATIVE_NOISE",
    "wiener_response",
    "hammerstein_response",
    "plant_response",
    "noiseless_rms",
]
