"""MSE loss, analytic BPTT gradients, Adam and the epoch loop."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .cells import (
    OUTPUT_PEEK_CHOICES,
    CellParams,
    DenseParams,
    GruParams,
    LstmParams,
    dense_forward,
    run_cell,
)
from .errors import ConfigError, NumericError, ShapeError
from .numerics import derive_seed, make_rng

log = logging.getLogger(__name__)

KINDS = ("LSTM", "GRU")


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    units: int = 128
    gradient_clip: Optional[float] = None
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    peepholes: bool = True
    output_peek: str = "current"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.units < 1:
            raise ConfigError(f"units must be >= 1, got {self.units}")
        if self.gradient_clip is not None and not self.gradient_clip > 0:
            raise ConfigError(f"gradient_clip must be > 0, got {self.gradient_clip}")
        if self.output_peek not in OUTPUT_PEEK_CHOICES:
            raise ConfigError(f"output_peek must be one of {OUTPUT_PEEK_CHOICES}")


@dataclass
class TrainedModel:
    """A recurrent cell with its dense head, plus the run that produced it."""

    kind: str
    cell: CellParams
    dense: DenseParams
    window: int
    config: TrainConfig = field(default_factory=TrainConfig)
    final_loss: float = float("nan")

    @property
    def steps(self) -> int:
        return self.dense.steps

    @property
    def units(self) -> int:
        return self.cell.units

    def parameters(self) -> dict[str, np.ndarray]:
        return {**self.cell.arrays(), **self.dense.arrays()}

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.window:
            raise ShapeError(f"expected windows of shape (batch, {self.window}), got {X.shape}")
        if X.shape[0] == 0:
            return np.zeros((0, self.steps))
        trace = run_cell(self.cell, X, self.config.output_peek)
        return dense_forward(self.dense, trace[-1][-1])


def init_model(kind: str, window: int, steps: int, config: TrainConfig) -> TrainedModel:
    """Fresh model with weights drawn from ``config.seed``."""
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    rng = make_rng(config.seed)
    if kind == "LSTM":
        cell = LstmParams.init(config.units, rng, peepholes=config.peepholes)
    else:
        cell = GruParams.init(config.units, rng)
    dense = DenseParams.init(steps, config.units, rng)
    return TrainedModel(kind, cell, dense, window, config)


def mse(actual, predicted) -> float:
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape:
        raise ShapeError(f"shape mismatch: actual {actual.shape} vs predicted {predicted.shape}")
    if actual.size == 0:
        raise ShapeError("mse of empty arrays")
    return float(np.mean((actual - predicted) ** 2))


def bptt_gradients(model: TrainedModel, X: np.ndarray, Y: np.ndarray, context: str = ""):
    """Batch MSE and its exact gradient with respect to every parameter.

    Returns ``(loss, grads)`` where ``grads`` maps parameter names to arrays
    shaped like :meth:`TrainedModel.parameters`.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ShapeError(f"window batch {X.shape} and target batch {Y.shape} do not pair up")
    if X.shape[1] != model.window or Y.shape[1] != model.steps:
        raise ShapeError(
            f"expected windows of width {model.window} and targets of width {model.steps}, "
            f"got {X.shape} and {Y.shape}"
        )
    cell = model.cell
    xt = np.ascontiguousarray(X.T)
    peek_new = model.config.output_peek == "current"
    # overflow is reported below as NumericError
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(cell, LstmParams):
            args = cell.kernel_args()
            trace = kernels.lstm_forward(xt, *args, peek_new)
        else:
            args = cell.kernel_args()
            trace = kernels.gru_forward(xt, *args)
        h_last = trace[-1][-1]
        pred = dense_forward(model.dense, h_last)
        diff = pred - Y
        loss = float(np.mean(diff * diff))
        dpred = (2.0 / diff.size) * diff
        grads = {"W_d": dpred.T @ h_last, "b_d": dpred.sum(axis=0)}
        dh_last = np.ascontiguousarray(dpred @ model.dense.W_d)
        if isinstance(cell, LstmParams):
            out = kernels.lstm_backward(xt, *trace, *args[4:], dh_last, peek_new)
            names = ("W_i", "W_f", "W_o", "W_c", "U_i", "U_f", "U_o", "U_c", "V_i", "V_f", "V_o")
        else:
            out = kernels.gru_backward(xt, *trace, *args[3:], dh_last)
            names = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h")
    for name, g in zip(names, out):
        grads[name] = g[:, None] if name.startswith("W_") else g
    if isinstance(cell, LstmParams) and not model.config.peepholes:
        for name in ("V_i", "V_f", "V_o"):
            grads[name] = np.zeros_like(grads[name])
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}" + (f" ({context})" if context else ""))
    if not np.isfinite(loss):
        raise NumericError("non-finite loss" + (f" ({context})" if context else ""))
    return loss, grads


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.items()},
            v={k: np.zeros_like(a) for k, a in params.items()},
            **hyper,
        )

    def copy(self) -> "AdamState":
        return AdamState(
            self.lr, self.beta1, self.beta2, self.epsilon,
            {k: a.copy() for k, a in self.m.items()},
            {k: a.copy() for k, a in self.v.items()},
            self.step,
        )


def adam_update(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState):
    """One bias-corrected Adam step. ``params`` arrays are updated in place."""
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ShapeError("params, grads and optimizer state name different parameters")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape or state.m[name].shape != p.shape:
            raise ShapeError(f"{name}: param {p.shape}, grad {g.shape}, moment {state.m[name].shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)
    return params, state


def _clip(grads: dict[str, np.ndarray], max_norm: float) -> None:
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale


def train(
    kind: str,
    dataset,
    config: TrainConfig,
    on_epoch: Optional[Callable[[int, float], None]] = None,
):
    """Fit a model on the training rows of ``dataset``.

    Only ``dataset.X[:N]`` and ``dataset.Y[:N]`` are read. Batch order is
    reshuffled every epoch from a generator derived from ``config.seed``.
    The recorded loss per epoch is the mean batch loss weighted by batch size.
    Returns ``(model, history)``.
    """
    n_train = dataset.N
    if n_train < 1:
        raise ConfigError("dataset has no training rows")
    X = np.asarray(dataset.X[:n_train], dtype=np.float64)
    Y = np.asarray(dataset.Y[:n_train], dtype=np.float64)
    model = init_model(kind, dataset.w, dataset.f, config)
    params = model.parameters()
    state = AdamState.for_params(
        params, lr=config.learning_rate, beta1=config.beta1,
        beta2=config.beta2, epsilon=config.epsilon,
    )
    rng = make_rng(derive_seed(config.seed, 1))
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        total = 0.0
        for b, start in enumerate(range(0, n_train, config.batch_size)):
            idx = order[start:start + config.batch_size]
            loss, grads = bptt_gradients(
                model, X[idx], Y[idx], context=f"epoch {epoch + 1}, batch {b + 1}"
            )
            if config.gradient_clip is not None:
                _clip(grads, config.gradient_clip)
            adam_update(params, grads, state)
            total += loss * len(idx)
        epoch_loss = total / n_train
        if not np.isfinite(epoch_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch + 1}")
        history.append(epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_loss)
        log.debug("%s epoch %d loss %.6g", kind, epoch + 1, epoch_loss)
    model.final_loss = history[-1]
    return model, history


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
