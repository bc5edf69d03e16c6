"""
Discrete SISO linear state-space systems.

    x_t = A x_{t-1} + b u_{t-1}        (t >= 1, x_0 given)
    y_t = c^T x_t + D u_t              (t >= 0)

Three equivalent views of the same system are supported: the recurrence
(simulate_ssm), the rational transfer function G(q) = c^T (qI - A)^-1 b + D in
descending powers of the shift operator q (ssm_to_transfer / simulate_transfer),
and the truncated impulse response (ssm_to_fir / fir_filter).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import lfilter

from .errors import DimensionMismatch, InstabilityWarning
from .signals import Signal, as_signal

MAX_TRANSFER_ORDER = 16


@dataclass(frozen=True, eq=False)
class StateSpaceParams:
    A: NDArray[np.float64]
    b: NDArray[np.float64]
    c: NDArray[np.float64]
    D: float = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        d = A.shape[0]
        if A.shape != (d, d):
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        if b.shape != (d,) or c.shape != (d,):
            raise DimensionMismatch(
                f"b and c must have length {d}, got {b.shape[0]} and {c.shape[0]}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "D", float(self.D))

    @property
    def d(self) -> int:
        return int(self.A.shape[0])

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def is_stable(self) -> bool:
        """All eigenvalues strictly inside the unit circle."""
        return self.spectral_radius() < 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "D": self.D,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "StateSpaceParams":
        p = cls(A=np.asarray(doc["A"]), b=np.asarray(doc["b"]), c=np.asarray(doc["c"]), D=doc.get("D", 0.0))
        if "d" in doc and int(doc["d"]) != p.d:
            raise DimensionMismatch(f"declared d={doc['d']} but A is {p.d}x{p.d}")
        return p


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Rational G(q) with coefficients in descending powers of q; monic denominator."""

    numerator: NDArray[np.float64]
    denominator: NDArray[np.float64]

    def __post_init__(self) -> None:
        num = np.atleast_1d(np.asarray(self.numerator, dtype=np.float64))
        den = np.atleast_1d(np.asarray(self.denominator, dtype=np.float64))
        if den.size == 0 or den[0] == 0.0:
            raise DimensionMismatch("denominator needs a non-zero leading coefficient")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise DimensionMismatch(
                f"improper transfer function: numerator degree {num.size - 1} > denominator degree {den.size - 1}"
            )
        if den[0] != 1.0:
            num, den = num / den[0], den / den[0]
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    def evaluate(self, q: complex | ArrayLike) -> Any:
        return np.polyval(self.numerator, q) / np.polyval(self.denominator, q)

    def to_dict(self) -> Dict[str, Any]:
        return {"numerator": self.numerator.tolist(), "denominator": self.denominator.tolist()}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "TransferFunction":
        return cls(numerator=np.asarray(doc["numerator"]), denominator=np.asarray(doc["denominator"]))


@dataclass(frozen=True, eq=False)
class FirCoefficients:
    """theta[0] is the direct term D, theta[1:] are the Markov parameters theta_1..theta_d'."""

    theta: NDArray[np.float64]
    tail_bound: float = 0.0
    residual_norm: Optional[float] = field(default=None)

    def __post_init__(self) -> None:
        th = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if th.size < 1:
            raise DimensionMismatch("FIR needs at least the direct term")
        object.__setattr__(self, "theta", th)

    @property
    def order(self) -> int:
        return int(self.theta.size - 1)

    @property
    def direct(self) -> float:
        return float(self.theta[0])

    @property
    def taps(self) -> NDArray[np.float64]:
        return self.theta[1:]


# ---------- Simulation ----------


def simulate_ssm(
    p: StateSpaceParams, u: ArrayLike, x0: Optional[ArrayLike] = None
) -> tuple[Signal, NDArray[np.float64]]:
    """Run the recurrence; returns (y, states) with states[t] = x_t, shape (T, d)."""
    sig = as_signal(u, name="u")
    d = p.d
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(-1)
    if x.shape != (d,):
        raise DimensionMismatch(f"x0 must have length {d}, got {x.shape[0]}")
    T = sig.size
    if T > 10 * d and not p.is_stable():
        warnings.warn(
            f"spectral radius {p.spectral_radius():.4f} >= 1 over {T} steps; output may diverge",
            InstabilityWarning,
            stacklevel=2,
        )
    states = np.empty((T, d))
    states[0] = x
    for t in range(1, T):
        x = p.A @ x + p.b * sig[t - 1]
        states[t] = x
    y = states @ p.c + p.D * sig
    return y, states


def impulse_response(p: StateSpaceParams, n: int) -> Signal:
    """First n samples of the response to a unit impulse: [D, c^T b, c^T A b, ...]."""
    u = np.zeros(max(int(n), 1))
    u[0] = 1.0
    y, _ = simulate_ssm(p, u)
    return y[: max(int(n), 0)]


def ssm_to_transfer(p: StateSpaceParams) -> TransferFunction:
    """Leverrier-Faddeev: characteristic polynomial and adjugate of (qI - A) together.

    adj(qI - A) = sum_{k=0}^{d-1} N_k q^{d-1-k} with N_0 = I, N_k = A N_{k-1} + a_k I,
    a_k = -tr(A N_{k-1}) / k.
    """
    d = p.d
    if d > MAX_TRANSFER_ORDER:
        raise DimensionMismatch(f"transfer extraction supports d <= {MAX_TRANSFER_ORDER}, got {d}")
    den = np.zeros(d + 1)
    den[0] = 1.0
    adj_terms = np.zeros(d)
    N = np.eye(d)
    for k in range(1, d + 1):
        adj_terms[k - 1] = p.c @ N @ p.b
        AN = p.A @ N
        den[k] = -np.trace(AN) / k
        N = AN + den[k] * np.eye(d)
    num = np.concatenate([[0.0], adj_terms]) + p.D * den
    return TransferFunction(numerator=_trim_leading(num, keep=1), denominator=den)


def _trim_leading(coeffs: NDArray[np.float64], keep: int) -> NDArray[np.float64]:
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return np.zeros(keep)
    return coeffs[min(int(nz[0]), coeffs.size - keep) :]


def simulate_transfer(tf: TransferFunction, u: ArrayLike) -> Signal:
    """Difference equation of G(q) with zero initial conditions.

    With n = deg(den) and m = deg(num), G(q) = num(q)/den(q) becomes a filter in
    q^-1 by padding the numerator with n - m leading zeros.
    """
    sig = as_signal(u, name="u")
    num, den = tf.numerator, tf.denominator
    b = np.concatenate([np.zeros(den.size - num.size), num])
    return lfilter(b, den, sig)


def ssm_to_fir(p: StateSpaceParams, dprime: int) -> FirCoefficients:
    if dprime < 1:
        raise DimensionMismatch(f"dprime must be >= 1, got {dprime}")
    theta = np.empty(dprime + 1)
    theta[0] = p.D
    v = p.b.copy()
    for i in range(1, dprime + 1):
        theta[i] = p.c @ v
        v = p.A @ v
    return FirCoefficients(theta=theta, tail_bound=float(abs(p.c @ v)))


def fir_filter(fir: FirCoefficients | Sequence[float], u: ArrayLike) -> Signal:
    """y_t = theta_0 u_t + sum_i theta_i u_{t-i}, zero initial memory."""
    theta = fir.theta if isinstance(fir, FirCoefficients) else np.asarray(fir, dtype=np.float64)
    return lfilter(theta, [1.0], as_signal(u, name="u"))


__all__ = [
    "StateSpaceParams",
    "TransferFunction",
    "FirCoefficients",
    "simulate_ssm",
    "impulse_response",
    "ssm_to_transfer",
    "simulate_transfer",
    "ssm_to_fir",
    "fir_filter",
    "MAX_TRANSFER_ORDER",
]
