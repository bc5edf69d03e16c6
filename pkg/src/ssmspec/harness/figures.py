"""
Four multisine signals that illustrate the K-spectral ordering.

    signal_1: 6 unit sinusoids             (energy on exactly 12 bins, metric maximal at K = 12)
    signal_2: 3 unit sinusoids             (only 6 bins)
    signal_3: 12 unit sinusoids            (23 bins, energy spread thin)
    signal_4: 3 unit + 3 half-amplitude    (12 bins, unequal)

At K = 12 the metric orders them 1 > 4 > 3 > 2. Signal 3 puts one of its
components on the Nyquist bin, which lifts it to sqrt(6.5 T); with interior
bins only it would tie signal 2 at sqrt(6 T).
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from ..kspectral import k_spectral
from ..signals import Signal, dft_magnitudes, normalize

DEMO_NAMES = ("signal_1", "signal_2", "signal_3", "signal_4")
DEMO_EXPECTED_ORDER = ("signal_1", "signal_4", "signal_3", "signal_2")


def _sum_of_sines(T: int, bins: np.ndarray, amps: np.ndarray, phases: np.ndarray) -> Signal:
    t = np.arange(T, dtype=np.float64)[:, None]
    return (amps[None, :] * np.sin(2.0 * np.pi * bins[None, :] * t / T + phases[None, :])).sum(axis=1)


def demo_signals(T: int = 256, seed: int = 0) -> Dict[str, Signal]:
    if T < 64 or T % 2:
        raise ValueError(f"T must be even and >= 64, got {T}")
    rng = np.random.default_rng(seed)
    interior = np.arange(1, T // 2)

    def draw(n: int) -> np.ndarray:
        return np.sort(rng.choice(interior, size=n, replace=False)).astype(np.float64)

    def phases(n: int) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * np.pi, size=n)

    out: Dict[str, Signal] = {}
    out["signal_1"] = _sum_of_sines(T, draw(6), np.ones(6), phases(6))
    out["signal_2"] = _sum_of_sines(T, draw(3), np.ones(3), phases(3))
    bins3 = np.concatenate([draw(11), [T / 2.0]])
    phases3 = phases(12)
    # sin(pi t + pi/2) = (-1)^t keeps the Nyquist component at unit amplitude
    phases3[-1] = np.pi / 2.0
    out["signal_3"] = _sum_of_sines(T, bins3, np.ones(12), phases3)
    out["signal_4"] = _sum_of_sines(T, draw(6), np.array([1.0, 1.0, 1.0, 0.5, 0.5, 0.5]), phases(6))
    return out


def demo_scores(T: int = 256, seed: int = 0, K: int = 12) -> Dict[str, float]:
    return {name: k_spectral(dft_magnitudes(normalize(s)), K) for name, s in demo_signals(T, seed).items()}


def demo_ordering(K: int = 12, T: int = 256, seed: int = 0) -> List[Tuple[str, float]]:
    """(name, R) pairs sorted by decreasing metric."""
    scores = demo_scores(T, seed, K)
    return sorted(scores.items(), key=lambda kv: kv[1], reverse=True)


__all__ = ["DEMO_NAMES", "DEMO_EXPECTED_ORDER", "demo_signals", "demo_scores", "demo_ordering"]
