"""
Informativeness of input signals.

Covers the classical tools for judging whether an input can identify a linear
model: sample autocovariance, persistence-of-excitation (PE) order, the
least-squares FIR estimate over the Toeplitz regressor, and the FIR Fisher
information matrix in time and frequency form with its A-optimality score.
Also hosts the two input generators used by the experiments (multisine and
piecewise-constant).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import toeplitz

from .errors import DegenerateSignal, LagTooLarge, LengthMismatch, RankDeficient
from .signals import Signal, Spectrum, as_signal
from .ssm_core import FirCoefficients

logger = logging.getLogger(__name__)

DEFAULT_PE_TOL = 1e-6
RANK_TOL = 1e-8

Estimator = Literal["circular", "truncated"]


@dataclass(frozen=True, eq=False)
class CovarianceSequence:
    """r[l] for l = 0..max_lag around the sample mean."""

    r: NDArray[np.float64]
    mean: float
    circular: bool = False

    @property
    def max_lag(self) -> int:
        return int(self.r.size - 1)


@dataclass(frozen=True, eq=False)
class PeMatrix:
    matrix: NDArray[np.float64]

    @property
    def order(self) -> int:
        return int(self.matrix.shape[0])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True, eq=False)
class Fim:
    """Fisher information over FIR parameters theta_1..theta_d for output-noise variance sigma."""

    M: NDArray[np.float64]
    sigma: float

    @cached_property
    def trace(self) -> float:
        return float(np.trace(self.M))

    @property
    def order(self) -> int:
        return int(self.M.shape[0])


@dataclass(frozen=True, eq=False)
class MultisineSpec:
    i: int
    T: int
    frequencies: NDArray[np.float64]
    phases: NDArray[np.float64]
    c: float
    target_norm: float
    seed: int
    integer_bins: bool = False

    def raw(self) -> Signal:
        t = np.arange(self.T, dtype=np.float64)[:, None]
        arg = 2.0 * np.pi * self.frequencies[None, :] * t / self.T + 4.0 * np.pi * self.phases[None, :] / self.T
        return np.sin(arg).sum(axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "i": self.i,
            "T": self.T,
            "frequencies": self.frequencies.tolist(),
            "phases": self.phases.tolist(),
            "c": self.c,
            "target_norm": self.target_norm,
            "seed": self.seed,
            "integer_bins": self.integer_bins,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "MultisineSpec":
        return cls(
            i=int(doc["i"]),
            T=int(doc["T"]),
            frequencies=np.asarray(doc["frequencies"], dtype=np.float64),
            phases=np.asarray(doc["phases"], dtype=np.float64),
            c=float(doc["c"]),
            target_norm=float(doc["target_norm"]),
            seed=int(doc["seed"]),
            integer_bins=bool(doc.get("integer_bins", False)),
        )


# ---------- Covariance and PE ----------


def autocovariance(u: ArrayLike, max_lag: int, *, circular: bool = False) -> CovarianceSequence:
    """Biased (1/T) sample autocovariance.

    The truncated estimate sums the T - l available products; the circular one
    wraps the record around, which is exact for signals made of whole periods.
    """
    sig = as_signal(u, name="u")
    T = sig.size
    if max_lag < 0 or max_lag >= T:
        raise LagTooLarge(f"max_lag must be in [0, {T - 1}], got {max_lag}")
    mean = float(sig.mean())
    z = sig - mean
    if circular:
        r = np.array([np.dot(np.roll(z, -l), z) for l in range(max_lag + 1)]) / T
    else:
        r = np.array([np.dot(z[l:], z[: T - l]) for l in range(max_lag + 1)]) / T
    return CovarianceSequence(r=r, mean=mean, circular=circular)


def pe_matrix(cov: CovarianceSequence, d: int) -> PeMatrix:
    if d < 1 or d - 1 > cov.max_lag:
        raise LagTooLarge(f"order {d} needs lags up to {d - 1}, sequence stops at {cov.max_lag}")
    return PeMatrix(matrix=toeplitz(cov.r[:d]))


def pe_order(
    u: ArrayLike,
    max_order: int,
    tol: float = DEFAULT_PE_TOL,
    *,
    estimator: Estimator = "circular",
) -> int:
    """Largest d <= max_order whose PE matrix has min eigenvalue > tol * r(0); 0 if none."""
    sig = as_signal(u, name="u")
    if max_order >= sig.size:
        raise LagTooLarge(f"max_order must be < T={sig.size}, got {max_order}")
    if max_order < 1:
        return 0
    cov = autocovariance(sig, max_order - 1, circular=(estimator == "circular"))
    r0 = float(cov.r[0])
    if r0 <= 0.0:
        return 0
    full = toeplitz(cov.r)
    order = 0
    # leading principal submatrices: min eigenvalue is non-increasing in d
    for d in range(1, max_order + 1):
        if np.linalg.eigvalsh(full[:d, :d])[0] > tol * r0:
            order = d
        else:
            break
    return order


# ---------- FIR least squares and Fisher information ----------


def regressor_matrix(u: ArrayLike, d: int) -> NDArray[np.float64]:
    """Rows [u_{t-1}, ..., u_{t-d}] for t = d..T-1."""
    sig = as_signal(u, name="u")
    if d < 1 or sig.size <= d:
        raise LengthMismatch(f"regressor of order {d} needs more than {d} samples, got {sig.size}")
    return toeplitz(sig[d - 1 : sig.size - 1], sig[d - 1 :: -1])


def estimate_fir_ls(u: ArrayLike, y: ArrayLike, d: int) -> FirCoefficients:
    """Least-squares FIR taps theta_1..theta_d of y_t = sum_i theta_i u_{t-i}.

    Raises RankDeficient when the regressor's singular values spread beyond
    1e-8, i.e. the input is not exciting enough for order d.
    """
    us = as_signal(u, name="u")
    ys = as_signal(y, name="y")
    if us.size != ys.size:
        raise LengthMismatch(f"u has {us.size} samples, y has {ys.size}")
    if us.size <= 2 * d:
        raise LengthMismatch(f"FIR order {d} needs T > {2 * d}, got T={us.size}")
    U = regressor_matrix(us, d)
    target = ys[d:]
    sv = np.linalg.svd(U, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] < RANK_TOL * sv[0]:
        raise RankDeficient(
            f"regressor rank < {d}: singular values span [{sv[-1]:.3g}, {sv[0]:.3g}]",
            smallest=float(sv[-1]),
            largest=float(sv[0]),
        )
    theta, *_ = np.linalg.lstsq(U, target, rcond=None)
    residual = float(np.linalg.norm(target - U @ theta))
    return FirCoefficients(theta=np.concatenate([[0.0], theta]), residual_norm=residual)


def _check_sigma(sigma: float) -> float:
    if not sigma > 0.0:
        raise ValueError(f"noise variance sigma must be > 0, got {sigma}")
    return float(sigma)


def fim_fir_time(u: ArrayLike, d: int, sigma: float) -> Fim:
    s = _check_sigma(sigma)
    U = regressor_matrix(u, d)
    M = U.T @ U / s
    return Fim(M=0.5 * (M + M.T), sigma=s)


def fim_fir_freq(spec: Spectrum, d: int, sigma: float) -> Fim:
    """M[i,k] = (1/(sigma T)) sum_s |U_s|^2 cos(2 pi s (i-k) / T), a symmetric Toeplitz matrix."""
    s = _check_sigma(sigma)
    T = spec.source_length
    if d < 1 or d > T:
        raise LagTooLarge(f"FIM order must be in [1, {T}], got {d}")
    power = spec.magnitudes**2
    lags = np.arange(d)
    bins = np.arange(T)
    col = (power[None, :] * np.cos(2.0 * np.pi * np.outer(lags, bins) / T)).sum(axis=1) / (s * T)
    return Fim(M=toeplitz(col), sigma=s)


def a_optimality(m: Fim) -> float:
    return m.trace


def input_design_scores(
    u: ArrayLike, d: int, sigma: float = 1.0, max_order: Optional[int] = None
) -> Dict[str, float | int]:
    """A-optimality (FIR FIM trace of order d) and PE order (capped at 4d) of one input."""
    sig = as_signal(u, name="u")
    cap = min(4 * d if max_order is None else max_order, sig.size - 1)
    return {
        "aopt": a_optimality(fim_fir_time(sig, d, sigma)),
        "pe_order": pe_order(sig, cap),
    }


# ---------- Generators ----------


def _draw_frequencies(rng: np.random.Generator, i: int, T: int, integer_bins: bool) -> NDArray[np.float64]:
    if not integer_bins:
        return rng.uniform(0.0, T / 2.0, size=i)
    pool = np.arange(1, math.ceil(T / 2))
    if pool.size < i:
        raise DegenerateSignal(f"cannot draw {i} distinct interior bins for T={T}")
    return np.sort(rng.choice(pool, size=i, replace=False)).astype(np.float64)


def gen_multisine(
    i: int,
    T: int,
    target_norm: float = 100.0,
    seed: int = 0,
    integer_bins: bool = False,
) -> Tuple[Signal, MultisineSpec]:
    """i-component multisine c * sum_j sin(2 pi w_j t / T + 4 pi psi_j / T) with ||u||_2 = target_norm."""
    if i < 1 or T < 2:
        raise DegenerateSignal(f"multisine needs i >= 1 and T >= 2, got i={i}, T={T}")
    if not target_norm > 0.0:
        raise ValueError(f"target_norm must be > 0, got {target_norm}")
    rng = np.random.default_rng(seed)
    freqs = _draw_frequencies(rng, i, T, integer_bins)
    for attempt in range(2):
        phases = rng.uniform(0.0, T / 2.0, size=i)
        spec = MultisineSpec(i=i, T=T, frequencies=freqs, phases=phases, c=1.0,
                             target_norm=float(target_norm), seed=int(seed), integer_bins=integer_bins)
        raw = spec.raw()
        norm = float(np.linalg.norm(raw))
        if norm > 0.0:
            break
        logger.info("multisine i=%d seed=%d is identically zero; resampling phases", i, seed)
    else:
        raise DegenerateSignal(f"multisine i={i} T={T} seed={seed} is identically zero")
    c = float(target_norm) / norm
    spec = MultisineSpec(i=i, T=T, frequencies=freqs, phases=phases, c=c,
                         target_norm=float(target_norm), seed=int(seed), integer_bins=integer_bins)
    return c * raw, spec


def regenerate_multisine(spec: MultisineSpec) -> Signal:
    """Rebuild the exact samples from stored metadata."""
    return spec.c * spec.raw()


def gen_piecewise_constant(T: int, interval: int = 20, target_norm: float = 100.0, seed: int = 0) -> Signal:
    """Levels from U(-1, 1) held for `interval` steps, scaled to target_norm."""
    if interval < 1 or T < 1:
        raise DegenerateSignal(f"piecewise input needs T >= 1 and interval >= 1, got T={T}, interval={interval}")
    rng = np.random.default_rng(seed)
    levels = rng.uniform(-1.0, 1.0, size=math.ceil(T / interval))
    u = np.repeat(levels, interval)[:T]
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise DegenerateSignal(f"piecewise input T={T} seed={seed} is identically zero")
    return u * (float(target_norm) / norm)


__all__ = [
    "CovarianceSequence",
    "PeMatrix",
    "Fim",
    "MultisineSpec",
    "autocovariance",
    "pe_matrix",
    "pe_order",
    "regressor_matrix",
    "estimate_fir_ls",
    "fim_fir_time",
    "fim_fir_freq",
    "a_optimality",
    "input_design_scores",
    "gen_multisine",
    "regenerate_multisine",
    "gen_piecewise_constant",
    "DEFAULT_PE_TOL",
]
