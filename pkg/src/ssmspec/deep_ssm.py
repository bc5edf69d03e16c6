"""
Deep SSM in numpy with backpropagation through time.

Architecture (per time step, SISO SSM channels evolving along time):

    u^1 = SiLU(W_in u0 + b_in)                         d_in channels
    y^l = SSM_l(u^l)                                   one SISO SSM per channel
    u^{l+1} = SiLU(W_mix[l] y^l + b_mix[l])            between consecutive SSM layers
    yL = W_out SiLU(y^L) + b_out

Every pre-SSM signal u^{l,i} is captured during the forward pass so the
K-spectral metric can be measured alongside SGD, interleaved with the updates
the same way the training loop applies them.

Parameters live in a dict of named arrays; `parameters()` flattens them in the
order of PARAM_ORDER (row-major within each array).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from .errors import EmptyInput, LengthMismatch, NonFinite, ZeroSignal
from .kspectral import sequence_metric
from .signals import Signal, Spectrum, dft_magnitudes, mse, normalize
from .ssm_core import StateSpaceParams

logger = logging.getLogger(__name__)

PARAM_ORDER = ("W_in", "b_in", "A", "B", "C", "D", "W_mix", "b_mix", "W_out", "b_out")

Pair = Tuple[ArrayLike, ArrayLike]


class DeepSsmConfig(BaseModel):
    model_config = ConfigDict(extra="ignore")

    d: int = Field(4, ge=1, description="State dimension of every SISO SSM channel")
    d_in: int = Field(4, ge=1, description="SSM channels per layer (width of the linear layers)")
    l_ssm: int = Field(1, ge=1, description="Number of stacked SSM layers")
    input_dim: int = Field(1, ge=1, description="Dimension of the model input u0")
    output_dim: int = Field(1, ge=1, description="Dimension of the model output yL")


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="ignore")

    lr: float = Field(1e-3, ge=0.0, description="SGD learning rate (0 freezes the parameters)")
    epochs: int = Field(30, ge=1, description="Training epochs per run")
    batch_size: int = Field(1, ge=1, description="Sequences per SGD step")
    K: Optional[int] = Field(None, ge=1, description="K of the K-spectral metric (default: d)")
    seed: int = Field(0, description="Seed for shuffling")
    window: Optional[int] = Field(
        None, ge=2, description="Split each sequence into windows of this length (memory control)"
    )
    grad_clip: Optional[float] = Field(
        None, gt=0.0, description="Global-norm gradient clipping; None means plain SGD"
    )
    shuffle: bool = Field(True, description="Shuffle sequence order every epoch (seeded)")
    keep_spectra: bool = Field(False, description="Retain captured spectra for offline K sweeps")


# ---------- Model ----------


@dataclass(eq=False)
class DeepSsm:
    config: DeepSsmConfig
    params: Dict[str, NDArray[np.float64]]
    seed: int = 0

    def parameter_count(self) -> int:
        return int(sum(self.params[k].size for k in PARAM_ORDER))

    def channel(self, layer: int, i: int) -> StateSpaceParams:
        """SSM of channel i in layer `layer` (0-based) as a standalone system."""
        p = self.params
        return StateSpaceParams(A=p["A"][layer, i], b=p["B"][layer, i], c=p["C"][layer, i], D=p["D"][layer, i])

    def copy(self) -> "DeepSsm":
        return DeepSsm(config=self.config, params={k: v.copy() for k, v in self.params.items()}, seed=self.seed)


@dataclass(eq=False)
class CapturedSignals:
    """Pre-SSM signals, shape (l_ssm, T, d_in)."""

    signals: NDArray[np.float64]

    @property
    def count(self) -> int:
        return int(self.signals.shape[0] * self.signals.shape[2])

    def channel(self, layer: int, i: int) -> Signal:
        return self.signals[layer, :, i]

    def items(self) -> Iterator[Tuple[int, int, Signal]]:
        for layer in range(self.signals.shape[0]):
            for i in range(self.signals.shape[2]):
                yield layer, i, self.signals[layer, :, i]


def _uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> NDArray[np.float64]:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _stable_state_matrix(rng: np.random.Generator, d: int) -> NDArray[np.float64]:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.where(np.diag(r) == 0.0, 1.0, np.diag(r)))
    radii = rng.uniform(0.3, 0.95, size=d) * rng.choice([-1.0, 1.0], size=d)
    return (q * radii) @ q.T


def _unit(rng: np.random.Generator, d: int) -> NDArray[np.float64]:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def init_model(cfg: DeepSsmConfig, seed: int) -> DeepSsm:
    """Seeded initialization; every SSM channel starts with spectral radius <= 0.95."""
    rng = np.random.default_rng(seed)
    L, n, d = cfg.l_ssm, cfg.d_in, cfg.d
    A = np.empty((L, n, d, d))
    B = np.empty((L, n, d))
    C = np.empty((L, n, d))
    for layer in range(L):
        for i in range(n):
            A[layer, i] = _stable_state_matrix(rng, d)
            B[layer, i] = _unit(rng, d)
            C[layer, i] = _unit(rng, d)
    params = {
        "W_in": _uniform(rng, cfg.input_dim, (n, cfg.input_dim)),
        "b_in": _uniform(rng, cfg.input_dim, (n,)),
        "A": A,
        "B": B,
        "C": C,
        "D": np.zeros((L, n)),
        "W_mix": _uniform(rng, n, (L - 1, n, n)),
        "b_mix": _uniform(rng, n, (L - 1, n)),
        "W_out": _uniform(rng, n, (cfg.output_dim, n)),
        "b_out": _uniform(rng, n, (cfg.output_dim,)),
    }
    return DeepSsm(config=cfg, params=params, seed=int(seed))


def parameters(m: DeepSsm) -> NDArray[np.float64]:
    return np.concatenate([m.params[k].ravel() for k in PARAM_ORDER])


def with_parameters(m: DeepSsm, theta: ArrayLike) -> DeepSsm:
    flat = np.asarray(theta, dtype=np.float64).ravel()
    if flat.size != m.parameter_count():
        raise LengthMismatch(f"expected {m.parameter_count()} parameters, got {flat.size}")
    params: Dict[str, NDArray[np.float64]] = {}
    offset = 0
    for k in PARAM_ORDER:
        shape = m.params[k].shape
        size = m.params[k].size
        params[k] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    return DeepSsm(config=m.config, params=params, seed=m.seed)


# ---------- Forward / backward ----------


def silu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return x * expit(x)


def silu_grad(x: NDArray[np.float64]) -> NDArray[np.float64]:
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


@dataclass(eq=False)
class _Cache:
    u0: NDArray[np.float64]
    z_in: NDArray[np.float64]
    u: List[NDArray[np.float64]] = field(default_factory=list)
    x: List[NDArray[np.float64]] = field(default_factory=list)
    y: List[NDArray[np.float64]] = field(default_factory=list)
    z_mix: List[NDArray[np.float64]] = field(default_factory=list)
    h: Optional[NDArray[np.float64]] = None
    out: Optional[NDArray[np.float64]] = None


def _as_input(m: DeepSsm, u0: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(u0, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != m.config.input_dim:
        raise LengthMismatch(f"input must have shape (T, {m.config.input_dim}), got {np.shape(u0)}")
    if arr.shape[0] == 0:
        raise EmptyInput("input sequence is empty")
    return arr


def _as_target(m: DeepSsm, y: ArrayLike, T: int) -> NDArray[np.float64]:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != (T, m.config.output_dim):
        raise LengthMismatch(f"target must have shape ({T}, {m.config.output_dim}), got {np.shape(y)}")
    return arr


def _ssm_bank(A, B, C, D, u):
    """Run d_in SISO SSMs side by side from zero state; u is (T, d_in)."""
    T, n = u.shape
    x = np.zeros((T, n, A.shape[-1]))
    for t in range(1, T):
        x[t] = np.einsum("ijk,ik->ij", A, x[t - 1]) + B * u[t - 1][:, None]
    y = np.einsum("tij,ij->ti", x, C) + D * u
    return x, y


def _forward(m: DeepSsm, u0: NDArray[np.float64]) -> _Cache:
    p = m.params
    with np.errstate(over="ignore", invalid="ignore"):
        z_in = u0 @ p["W_in"].T + p["b_in"]
        cache = _Cache(u0=u0, z_in=z_in)
        u = silu(z_in)
        for layer in range(m.config.l_ssm):
            if layer > 0:
                z = cache.y[-1] @ p["W_mix"][layer - 1].T + p["b_mix"][layer - 1]
                cache.z_mix.append(z)
                u = silu(z)
            x, y = _ssm_bank(p["A"][layer], p["B"][layer], p["C"][layer], p["D"][layer], u)
            cache.u.append(u)
            cache.x.append(x)
            cache.y.append(y)
        cache.h = silu(cache.y[-1])
        cache.out = cache.h @ p["W_out"].T + p["b_out"]
    if not np.all(np.isfinite(cache.out)):
        raise NonFinite("deep SSM forward pass produced NaN/inf", where="forward")
    return cache


def forward(m: DeepSsm, u0: ArrayLike) -> Tuple[NDArray[np.float64], CapturedSignals]:
    """Model output (1-D when output_dim == 1) and the captured pre-SSM signals."""
    cache = _forward(m, _as_input(m, u0))
    out = cache.out[:, 0] if m.config.output_dim == 1 else cache.out
    return out, CapturedSignals(signals=np.stack(cache.u))


def _backward(m: DeepSsm, cache: _Cache, g_out: NDArray[np.float64]) -> Dict[str, NDArray[np.float64]]:
    p = m.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    grads["W_out"] = g_out.T @ cache.h
    grads["b_out"] = g_out.sum(axis=0)
    gy = (g_out @ p["W_out"]) * silu_grad(cache.y[-1])
    for layer in range(m.config.l_ssm - 1, -1, -1):
        A, B, C, D = p["A"][layer], p["B"][layer], p["C"][layer], p["D"][layer]
        u, x = cache.u[layer], cache.x[layer]
        T = u.shape[0]
        grads["C"][layer] = np.einsum("ti,tij->ij", gy, x)
        grads["D"][layer] = (gy * u).sum(axis=0)
        du = D * gy
        dA = np.zeros_like(A)
        dB = np.zeros_like(B)
        lam = np.zeros_like(B)
        # lam holds dLoss/dx_{t+1} on entry to step t
        for t in range(T - 1, -1, -1):
            dA += lam[:, :, None] * x[t][:, None, :]
            dB += lam * u[t][:, None]
            du[t] += (B * lam).sum(axis=1)
            lam = C * gy[t][:, None] + np.einsum("ijk,ij->ik", A, lam)
        grads["A"][layer] = dA
        grads["B"][layer] = dB
        if layer > 0:
            gz = du * silu_grad(cache.z_mix[layer - 1])
            grads["W_mix"][layer - 1] = gz.T @ cache.y[layer - 1]
            grads["b_mix"][layer - 1] = gz.sum(axis=0)
            gy = gz @ p["W_mix"][layer - 1]
        else:
            gz = du * silu_grad(cache.z_in)
            grads["W_in"] = gz.T @ cache.u0
            grads["b_in"] = gz.sum(axis=0)
    return grads


def _flatten(grads: Dict[str, NDArray[np.float64]]) -> NDArray[np.float64]:
    return np.concatenate([grads[k].ravel() for k in PARAM_ORDER])


def _loss_grad_capture(
    m: DeepSsm, u0: ArrayLike, y_target: ArrayLike
) -> Tuple[float, NDArray[np.float64], CapturedSignals]:
    inp = _as_input(m, u0)
    target = _as_target(m, y_target, inp.shape[0])
    cache = _forward(m, inp)
    resid = cache.out - target
    loss = float(np.mean(resid**2))
    with np.errstate(over="ignore", invalid="ignore"):
        grad = _flatten(_backward(m, cache, 2.0 * resid / resid.size))
    if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NonFinite("loss or gradient is NaN/inf", where="backward")
    return loss, grad, CapturedSignals(signals=np.stack(cache.u))


def loss_and_gradient(m: DeepSsm, u0: ArrayLike, y_target: ArrayLike) -> Tuple[float, NDArray[np.float64]]:
    """Mean squared error and its gradient w.r.t. parameters(m)."""
    loss, grad, _ = _loss_grad_capture(m, u0, y_target)
    return loss, grad


def numerical_gradient(m: DeepSsm, u0: ArrayLike, y_target: ArrayLike, eps: float = 1e-5) -> NDArray[np.float64]:
    """Central finite differences of the loss, one coordinate at a time."""
    theta = parameters(m)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = eps
        up = loss_and_gradient(with_parameters(m, theta + step), u0, y_target)[0]
        down = loss_and_gradient(with_parameters(m, theta - step), u0, y_target)[0]
        grad[j] = (up - down) / (2.0 * eps)
    return grad


def predict_mse(m: DeepSsm, u_test: ArrayLike, y_true: ArrayLike) -> float:
    out, _ = forward(m, u_test)
    return mse(out, y_true)


# ---------- Metric capture ----------


@dataclass(eq=False)
class MetricSnapshot:
    r_bar: float
    per_layer_r: Dict[int, float]
    spectra: Optional[List[List[Spectrum]]] = None


class _MetricAccumulator:
    """Sums per-sequence channel means and per-layer channel means across one pass.

    Sequences whose channels are all zero are left out of the average.
    """

    def __init__(self, K: int, keep_spectra: bool):
        self.K = K
        self.keep = keep_spectra
        self.total = 0.0
        self.count = 0
        self.seen = 0
        self.layer_sums: Dict[int, float] = {}
        self.layer_counts: Dict[int, int] = {}
        self.spectra: List[List[Spectrum]] = []

    def add(self, cap: CapturedSignals, seq_id: int) -> None:
        spectra: List[Spectrum] = []
        layers: List[int] = []
        for layer, i, s in cap.items():
            try:
                spectra.append(dft_magnitudes(normalize(s)))
                layers.append(layer)
            except ZeroSignal:
                logger.warning("skipping zero channel layer=%d channel=%d sequence=%d", layer, i, seq_id)
        self.seen += 1
        if self.keep:
            self.spectra.append(spectra)
        if not spectra:
            return
        r_n, values = sequence_metric(spectra, self.K)
        self.total += r_n
        self.count += 1
        for layer in sorted(set(layers)):
            layer_values = [v for v, ll in zip(values, layers) if ll == layer]
            self.layer_sums[layer] = self.layer_sums.get(layer, 0.0) + float(np.mean(layer_values))
            self.layer_counts[layer] = self.layer_counts.get(layer, 0) + 1

    def snapshot(self) -> MetricSnapshot:
        if self.seen == 0:
            raise EmptyInput("no sequences were scored")
        per_layer = {k: self.layer_sums[k] / self.layer_counts[k] for k in sorted(self.layer_sums)}
        return MetricSnapshot(
            r_bar=self.total / self.count if self.count else 0.0,
            per_layer_r=per_layer,
            spectra=self.spectra if self.keep else None,
        )


def window_slices(T: int, window: Optional[int]) -> List[slice]:
    """Consecutive windows covering [0, T); a tail shorter than `window` joins the window before it."""
    if window is None or window >= T:
        return [slice(0, T)]
    n = T // window
    return [slice(i * window, (i + 1) * window if i < n - 1 else T) for i in range(n)]


def _sequences(data: Sequence[Pair], window: Optional[int]) -> List[Tuple[NDArray, NDArray]]:
    if not data:
        raise EmptyInput("training set is empty")
    out: List[Tuple[NDArray, NDArray]] = []
    for u, y in data:
        ua = np.asarray(u, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
        if ua.shape[0] != ya.shape[0]:
            raise LengthMismatch(f"input has {ua.shape[0]} steps, target has {ya.shape[0]}")
        out.extend((ua[w], ya[w]) for w in window_slices(ua.shape[0], window))
    return out


def measure_metric(
    m: DeepSsm, data: Sequence[Pair], K: int, *, window: Optional[int] = None, keep_spectra: bool = False
) -> MetricSnapshot:
    """K-spectral metric of the current parameters without any update."""
    acc = _MetricAccumulator(K, keep_spectra)
    for n, (u, _) in enumerate(_sequences(data, window)):
        _, cap = forward(m, u)
        acc.add(cap, n)
    return acc.snapshot()


# ---------- Training ----------


@dataclass(eq=False)
class EpochOutcome:
    """Result of one instrumented epoch; unpacks as (model, r_bar, per_layer_r, train_loss)."""

    model: DeepSsm
    r_bar: float
    per_layer_r: Dict[int, float]
    train_loss: float
    spectra: Optional[List[List[Spectrum]]] = None

    def __iter__(self):
        return iter((self.model, self.r_bar, self.per_layer_r, self.train_loss))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: Optional[float]
    r_bar: float
    per_layer_r: Dict[int, float]
    K: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "r_bar": self.r_bar,
            "per_layer_r": {str(k): v for k, v in self.per_layer_r.items()},
            "K": self.K,
        }


def _clip(grad: NDArray[np.float64], limit: Optional[float]) -> NDArray[np.float64]:
    if limit is None:
        return grad
    norm = float(np.linalg.norm(grad))
    return grad * (limit / norm) if norm > limit else grad


def train_epoch_with_metric(
    m: DeepSsm, data: Sequence[Pair], cfg: TrainConfig, *, epoch: int = 1
) -> EpochOutcome:
    """One SGD epoch that scores every sequence with the parameters current at its minibatch."""
    K = cfg.K if cfg.K is not None else m.config.d
    seqs = _sequences(data, cfg.window)
    order = np.arange(len(seqs))
    if cfg.shuffle:
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(seqs))
    acc = _MetricAccumulator(K, cfg.keep_spectra)
    theta = parameters(m)
    current = m
    losses: List[float] = []
    for start in range(0, len(order), cfg.batch_size):
        batch = order[start : start + cfg.batch_size]
        grad_sum = np.zeros_like(theta)
        for n in batch:
            u, y = seqs[int(n)]
            loss, grad, cap = _loss_grad_capture(current, u, y)
            acc.add(cap, int(n))
            losses.append(loss)
            grad_sum += grad
        theta = theta - cfg.lr * _clip(grad_sum / len(batch), cfg.grad_clip)
        if not np.all(np.isfinite(theta)):
            raise NonFinite("parameters became NaN/inf after SGD step", where="update")
        current = with_parameters(current, theta)
    snap = acc.snapshot()
    return EpochOutcome(
        model=current,
        r_bar=snap.r_bar,
        per_layer_r=snap.per_layer_r,
        train_loss=float(np.mean(losses)),
        spectra=snap.spectra,
    )


def fit(
    m: DeepSsm,
    data: Sequence[Pair],
    cfg: TrainConfig,
    val: Optional[Pair] = None,
    on_epoch: Optional[Callable[[EpochRecord, EpochOutcome], None]] = None,
) -> Tuple[DeepSsm, List[EpochRecord]]:
    """Run cfg.epochs instrumented epochs; records are numbered from 1."""
    K = cfg.K if cfg.K is not None else m.config.d
    records: List[EpochRecord] = []
    for epoch in range(1, cfg.epochs + 1):
        outcome = train_epoch_with_metric(m, data, cfg, epoch=epoch)
        m = outcome.model
        val_loss = predict_mse(m, val[0], val[1]) if val is not None else None
        rec = EpochRecord(
            epoch=epoch,
            train_loss=outcome.train_loss,
            val_loss=val_loss,
            r_bar=outcome.r_bar,
            per_layer_r=outcome.per_layer_r,
            K=K,
        )
        logger.info("epoch %d train_loss=%.6g r_bar=%.4f", epoch, rec.train_loss, rec.r_bar)
        records.append(rec)
        if on_epoch is not None:
            on_epoch(rec, outcome)
    return m, records


# ---------- Checkpoints ----------


def save_checkpoint(path: str | Path, m: DeepSsm, epoch: int) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": m.config.model_dump(mode="json"),
        "parameters": parameters(m).tolist(),
        "seed": m.seed,
        "epoch": int(epoch),
    }
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def load_checkpoint(path: str | Path) -> Tuple[DeepSsm, int]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = DeepSsmConfig.model_validate(doc["config"])
    template = init_model(cfg, int(doc.get("seed", 0)))
    return with_parameters(template, doc["parameters"]), int(doc.get("epoch", 0))


__all__ = [
    "DeepSsmConfig",
    "TrainConfig",
    "DeepSsm",
    "CapturedSignals",
    "MetricSnapshot",
    "EpochOutcome",
    "EpochRecord",
    "PARAM_ORDER",
    "init_model",
    "parameters",
    "with_parameters",
    "silu",
    "silu_grad",
    "forward",
    "loss_and_gradient",
    "numerical_gradient",
    "predict_mse",
    "measure_metric",
    "window_slices",
    "train_epoch_with_metric",
    "fit",
    "save_checkpoint",
    "load_checkpoint",
]
