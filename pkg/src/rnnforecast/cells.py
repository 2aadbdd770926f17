"""LSTM (with diagonal peepholes) and GRU cells plus the dense output head.

Gate pre-activations carry no bias terms. The LSTM output gate reads the
freshly updated memory cell by default; ``output_peek="previous"`` switches it
to the previous cell like the input and forget gates.

All weight matrices map a column input to a column output, so a cell with
``units`` units and scalar input has ``W_*`` of shape ``(units, 1)`` and
``U_*`` of shape ``(units, units)``. Peephole diagonals are stored as vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Union

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError
from .numerics import Rng, init_weights

OUTPUT_PEEK_CHOICES = ("current", "previous")


class _ParamsMixin:
    def arrays(self) -> dict[str, np.ndarray]:
        """Name -> array mapping. The arrays are the live parameter storage."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.arrays().items()})


@dataclass
class LstmParams(_ParamsMixin):
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    V_i: np.ndarray
    V_f: np.ndarray
    V_o: np.ndarray

    def __post_init__(self):
        n = self.U_i.shape[0]
        wshape = self.W_i.shape
        if len(wshape) != 2 or wshape[0] != n:
            raise ShapeError(f"W_i has shape {wshape}, expected ({n}, input_dim)")
        for name in ("W_f", "W_o", "W_c"):
            if getattr(self, name).shape != wshape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {wshape}")
        for name in ("U_i", "U_f", "U_o", "U_c"):
            if getattr(self, name).shape != (n, n):
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {(n, n)}")
        for name in ("V_i", "V_f", "V_o"):
            if getattr(self, name).shape != (n,):
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {(n,)}")

    @property
    def units(self) -> int:
        return self.U_i.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_i.shape[1]

    @classmethod
    def init(cls, units: int, rng: Rng, input_dim: int = 1, peepholes: bool = True):
        kw = {}
        for g in "ifoc":
            kw[f"W_{g}"] = init_weights(units, input_dim, rng)
        for g in "ifoc":
            kw[f"U_{g}"] = init_weights(units, units, rng)
        for g in "ifo":
            # diagonal entries have fan-in 1 per unit
            v = init_weights(1, units, rng)[0] if peepholes else np.zeros(units)
            kw[f"V_{g}"] = np.ascontiguousarray(v)
        return cls(**kw)

    def kernel_args(self) -> tuple:
        if self.input_dim != 1:
            raise ShapeError(f"kernels support input_dim 1, got {self.input_dim}")
        c = np.ascontiguousarray
        return (
            c(self.W_i[:, 0]), c(self.W_f[:, 0]), c(self.W_o[:, 0]), c(self.W_c[:, 0]),
            c(self.U_i), c(self.U_f), c(self.U_o), c(self.U_c),
            c(self.V_i), c(self.V_f), c(self.V_o),
        )


@dataclass
class GruParams(_ParamsMixin):
    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    U_z: np.ndarray
    U_r: np.ndarray
    U_h: np.ndarray

    def __post_init__(self):
        n = self.U_z.shape[0]
        wshape = self.W_z.shape
        if len(wshape) != 2 or wshape[0] != n:
            raise ShapeError(f"W_z has shape {wshape}, expected ({n}, input_dim)")
        for name in ("W_r", "W_h"):
            if getattr(self, name).shape != wshape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {wshape}")
        for name in ("U_z", "U_r", "U_h"):
            if getattr(self, name).shape != (n, n):
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {(n, n)}")

    @property
    def units(self) -> int:
        return self.U_z.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[1]

    @classmethod
    def init(cls, units: int, rng: Rng, input_dim: int = 1):
        kw = {}
        for g in "zrh":
            kw[f"W_{g}"] = init_weights(units, input_dim, rng)
        for g in "zrh":
            kw[f"U_{g}"] = init_weights(units, units, rng)
        return cls(**kw)

    def kernel_args(self) -> tuple:
        if self.input_dim != 1:
            raise ShapeError(f"kernels support input_dim 1, got {self.input_dim}")
        c = np.ascontiguousarray
        return (
            c(self.W_z[:, 0]), c(self.W_r[:, 0]), c(self.W_h[:, 0]),
            c(self.U_z), c(self.U_r), c(self.U_h),
        )


@dataclass
class DenseParams(_ParamsMixin):
    W_d: np.ndarray
    b_d: np.ndarray

    def __post_init__(self):
        if self.W_d.ndim != 2 or self.W_d.shape[0] < 1:
            raise ShapeError(f"W_d must be (steps, units) with steps >= 1, got {self.W_d.shape}")
        if self.b_d.shape != (self.W_d.shape[0],):
            raise ShapeError(f"b_d has shape {self.b_d.shape}, expected ({self.W_d.shape[0]},)")

    @property
    def steps(self) -> int:
        return self.W_d.shape[0]

    @classmethod
    def init(cls, steps: int, units: int, rng: Rng):
        return cls(init_weights(steps, units, rng), np.zeros(steps))


CellParams = Union[LstmParams, GruParams]


@dataclass
class CellState:
    h: np.ndarray
    c: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, units: int, kind: str = "LSTM") -> "CellState":
        return cls(np.zeros(units), np.zeros(units) if kind == "LSTM" else None)


@dataclass
class ForwardTrace:
    """Per-step gate activations of one window; each entry has shape ``(w, units)``."""

    kind: str
    inputs: np.ndarray
    gates: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.inputs)


def _check_peek(output_peek: str) -> bool:
    if output_peek not in OUTPUT_PEEK_CHOICES:
        raise ConfigError(f"output_peek must be one of {OUTPUT_PEEK_CHOICES}, got {output_peek!r}")
    return output_peek == "current"


def _check_step_inputs(units: int, input_dim: int, x_t, h):
    x_t = np.asarray(x_t, dtype=np.float64).reshape(-1)
    if x_t.shape != (input_dim,):
        raise ShapeError(f"x_t has length {x_t.size}, expected {input_dim}")
    if np.shape(h) != (units,):
        raise ShapeError(f"state has shape {np.shape(h)}, expected ({units},)")
    return x_t


def lstm_step(params: LstmParams, x_t, prev: CellState, output_peek: str = "current"):
    """Advance the LSTM by one timestep.

    Returns the new :class:`CellState` and a dict with the gate activations
    ``i``, ``f``, ``o`` and candidate cell ``c_tilde``.
    """
    peek_new = _check_peek(output_peek)
    x_t = _check_step_inputs(params.units, params.input_dim, x_t, prev.h)
    if prev.c is None or prev.c.shape != (params.units,):
        raise ShapeError("LSTM state needs a memory cell of length units")
    i, f, o, ct, c, h = kernels.lstm_cell(
        x_t, np.ascontiguousarray(prev.h[None, :]), np.ascontiguousarray(prev.c[None, :]),
        *params.kernel_args(), peek_new,
    )
    gates = {"i": i[0], "f": f[0], "o": o[0], "c_tilde": ct[0]}
    return CellState(h[0], c[0]), gates


def gru_step(params: GruParams, x_t, prev: CellState):
    """Advance the GRU by one timestep; gates ``z``, ``r`` and ``h_tilde``."""
    x_t = _check_step_inputs(params.units, params.input_dim, x_t, prev.h)
    z, r, _, ht, h = kernels.gru_cell(
        x_t, np.ascontiguousarray(prev.h[None, :]), *params.kernel_args()
    )
    return CellState(h[0]), {"z": z[0], "r": r[0], "h_tilde": ht[0]}


def run_cell(cell: CellParams, X: np.ndarray, output_peek: str = "current"):
    """Run ``cell`` over a batch of windows ``X`` (batch, w) from the zero state.

    Returns the tuple of trace arrays produced by the kernel; the last entry is
    the hidden-state sequence of shape ``(w, batch, units)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeError(f"window batch must be (batch, w), got {X.shape}")
    xt = np.ascontiguousarray(X.T)
    if isinstance(cell, LstmParams):
        return kernels.lstm_forward(xt, *cell.kernel_args(), _check_peek(output_peek))
    if isinstance(cell, GruParams):
        return kernels.gru_forward(xt, *cell.kernel_args())
    raise ConfigError(f"unknown cell parameters {type(cell).__name__}")


def dense_forward(dense: DenseParams, h: np.ndarray) -> np.ndarray:
    if h.shape[-1] != dense.W_d.shape[1]:
        raise ShapeError(f"hidden state width {h.shape[-1]} does not match W_d {dense.W_d.shape}")
    return h @ dense.W_d.T + dense.b_d


def forward_window(
    cell: CellParams,
    dense: DenseParams,
    window,
    keep_trace: bool = True,
    output_peek: str = "current",
):
    """Predict ``steps`` values from one window of length ``w``.

    Returns ``(prediction, trace)``; ``trace`` is None when ``keep_trace`` is off.
    """
    window = np.asarray(window, dtype=np.float64).reshape(-1)
    out = run_cell(cell, window[None, :], output_peek)
    pred = dense_forward(dense, out[-1][-1, 0])
    if not keep_trace:
        return pred, None
    if isinstance(cell, LstmParams):
        names = ("i", "f", "o", "c_tilde", "c", "h")
        kind = "LSTM"
    else:
        names = ("z", "r", "Uh_prev", "h_tilde", "h")
        kind = "GRU"
    gates = {k: a[:, 0, :].copy() for k, a in zip(names, out)}
    return pred, ForwardTrace(kind, window.copy(), gates)
