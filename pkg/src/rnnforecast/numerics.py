"""Dense array helpers, activations, seeded generators and finite differences.

Every numeric container in the package is a float64 ``numpy.ndarray``.
Random streams come from numpy's PCG64 bit generator, which is a published
64-bit algorithm with a platform-independent output sequence.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """Return a PCG64-backed generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 63-bit child seed from ``seed`` and integer keys."""
    ss = np.random.SeedSequence([seed, *keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def check_finite(a: np.ndarray, what: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{what} contains non-finite values")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    return check_finite(out, "matmul result")


def sigmoid(x) -> np.ndarray:
    """Logistic function, evaluated on the side of zero where exp cannot overflow."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh(x) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float64))


def init_weights(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """Uniform draws on [-1/sqrt(cols), 1/sqrt(cols)], shape ``(rows, cols)``."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"weight shape must be positive, got ({rows}, {cols})")
    bound = 1.0 / np.sqrt(cols)
    return rng.uniform(-bound, bound, size=(rows, cols))


def finite_difference_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``.

    ``x`` is perturbed in place one entry at a time and restored afterwards,
    so ``f`` may close over ``x`` (e.g. a parameter array inside a model).
    """
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ConfigError("x must be contiguous so it can be perturbed in place")
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        fp = float(f(x))
        flat[k] = orig - eps
        fm = float(f(x))
        flat[k] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite function value at entry {k}")
        gflat[k] = (fp - fm) / (2.0 * eps)
    return grad
