"""Plain-text model checkpoints.

Layout::

    rnnforecast-checkpoint 1
    kind LSTM
    window 60
    config {"epochs": 200, ...}
    final_loss 0.00123
    param W_i 128 1
    <row-major values, space separated, 17 significant digits>
    param V_i 128
    ...

Values are written with ``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cells import DenseParams, GruParams, LstmParams
from .errors import DataError
from .training import TrainConfig, TrainedModel, config_dict

MAGIC = "rnnforecast-checkpoint 1"


def dump_params(arrays: dict[str, np.ndarray]) -> list[str]:
    lines = []
    for name, a in arrays.items():
        lines.append(" ".join(["param", name, *map(str, a.shape)]))
        lines.append(" ".join(repr(float(v)) for v in a.reshape(-1)))
    return lines


def parse_params(lines: list[str]) -> dict[str, np.ndarray]:
    out = {}
    it = iter(lines)
    for head in it:
        parts = head.split()
        if not parts:
            continue
        if parts[0] != "param" or len(parts) < 3:
            raise DataError(f"malformed parameter header {head!r}")
        shape = tuple(int(s) for s in parts[2:])
        body = next(it, "")
        vals = np.array([float(v) for v in body.split()], dtype=np.float64)
        if vals.size != int(np.prod(shape)):
            raise DataError(f"{parts[1]}: expected {np.prod(shape)} values, got {vals.size}")
        out[parts[1]] = vals.reshape(shape)
    return out


def save_model(model: TrainedModel, path) -> None:
    lines = [
        MAGIC,
        f"kind {model.kind}",
        f"window {model.window}",
        "config " + json.dumps(config_dict(model.config), sort_keys=True),
        f"final_loss {model.final_loss!r}",
        *dump_params(model.parameters()),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if not lines or lines[0] != MAGIC:
        raise DataError(f"{path} is not a checkpoint")
    header = {}
    for line in lines[1:5]:
        key, _, value = line.partition(" ")
        header[key] = value
    try:
        kind = header["kind"]
        window = int(header["window"])
        config = TrainConfig(**json.loads(header["config"]))
        final_loss = float(header["final_loss"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: bad checkpoint header ({exc})") from exc
    arrays = parse_params(lines[5:])
    dense = DenseParams(arrays.pop("W_d"), arrays.pop("b_d"))
    cell_cls = LstmParams if kind == "LSTM" else GruParams
    try:
        cell = cell_cls(**arrays)
    except TypeError as exc:
        raise DataError(f"{path}: parameter set does not match {kind}") from exc
    return TrainedModel(kind, cell, dense, window, config, final_loss)
