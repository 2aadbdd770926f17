"""Inner loops of the recurrent cells: one step, a full window, and BPTT.

Each kernel is plain numpy code that numba can compile. When numba is
importable the kernels are wrapped with ``njit``; setting the environment
variable ``RNNFORECAST_NUMBA=0`` before import selects the pure-numpy path.
The uncompiled function stays reachable as ``kernel.py_func`` under numba,
which is what ``benchmarks/bench_kernels.py`` compares against.

Layout conventions (all float64, C-contiguous):

* ``xt``: inputs, shape ``(w, batch)``; time-major so ``xt[t]`` is contiguous.
* input weights ``w_*``: shape ``(units,)`` (input dimension is 1).
* recurrent weights ``u_*``: shape ``(units, units)``; pre-activations use
  ``h_prev @ u.T``.
* peephole diagonals ``v_*``: shape ``(units,)``.
* traces: shape ``(w, batch, units)``.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("RNNFORECAST_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by RNNFORECAST_NUMBA")
    from numba import njit

    BACKEND = "numba"
except ImportError:
    njit = None
    BACKEND = "numpy"


def _kernel(fn):
    if njit is None:
        return fn
    return njit(cache=True, nogil=True)(fn)


@_kernel
def sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@_kernel
def lstm_cell(x, h_prev, c_prev, w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c,
              v_i, v_f, v_o, peek_new):
    # order is forced by the output gate reading the new cell
    c_tilde = np.tanh(np.outer(x, w_c) + np.dot(h_prev, u_c.T))
    f = sigmoid(np.outer(x, w_f) + np.dot(h_prev, u_f.T) + c_prev * v_f)
    i = sigmoid(np.outer(x, w_i) + np.dot(h_prev, u_i.T) + c_prev * v_i)
    c = f * c_prev + i * c_tilde
    if peek_new:
        o = sigmoid(np.outer(x, w_o) + np.dot(h_prev, u_o.T) + c * v_o)
    else:
        o = sigmoid(np.outer(x, w_o) + np.dot(h_prev, u_o.T) + c_prev * v_o)
    h = o * np.tanh(c)
    return i, f, o, c_tilde, c, h


@_kernel
def gru_cell(x, h_prev, w_z, w_r, w_h, u_z, u_r, u_h):
    z = sigmoid(np.outer(x, w_z) + np.dot(h_prev, u_z.T))
    r = sigmoid(np.outer(x, w_r) + np.dot(h_prev, u_r.T))
    uh = np.dot(h_prev, u_h.T)
    h_tilde = np.tanh(np.outer(x, w_h) + r * uh)
    h = (1.0 - z) * h_prev + z * h_tilde
    return z, r, uh, h_tilde, h


@_kernel
def lstm_forward(xt, w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, v_i, v_f, v_o,
                 peek_new):
    w, batch = xt.shape
    n = u_i.shape[0]
    gi = np.empty((w, batch, n))
    gf = np.empty((w, batch, n))
    go = np.empty((w, batch, n))
    gct = np.empty((w, batch, n))
    cs = np.empty((w, batch, n))
    hs = np.empty((w, batch, n))
    h = np.zeros((batch, n))
    c = np.zeros((batch, n))
    for t in range(w):
        i, f, o, ct, c, h = lstm_cell(xt[t], h, c, w_i, w_f, w_o, w_c,
                                      u_i, u_f, u_o, u_c, v_i, v_f, v_o,
                                      peek_new)
        gi[t] = i
        gf[t] = f
        go[t] = o
        gct[t] = ct
        cs[t] = c
        hs[t] = h
    return gi, gf, go, gct, cs, hs


@_kernel
def lstm_backward(xt, gi, gf, go, gct, cs, hs, u_i, u_f, u_o, u_c,
                  v_i, v_f, v_o, dh_last, peek_new):
    w, batch, n = gi.shape
    dw_i = np.zeros(n)
    dw_f = np.zeros(n)
    dw_o = np.zeros(n)
    dw_c = np.zeros(n)
    du_i = np.zeros((n, n))
    du_f = np.zeros((n, n))
    du_o = np.zeros((n, n))
    du_c = np.zeros((n, n))
    dv_i = np.zeros(n)
    dv_f = np.zeros(n)
    dv_o = np.zeros(n)
    zero = np.zeros((batch, n))
    dh = dh_last.copy()
    dc = np.zeros((batch, n))
    for t in range(w - 1, -1, -1):
        x = xt[t]
        i = gi[t]
        f = gf[t]
        o = go[t]
        ct = gct[t]
        c = cs[t]
        if t > 0:
            h_prev = hs[t - 1]
            c_prev = cs[t - 1]
        else:
            h_prev = zero
            c_prev = zero
        tc = np.tanh(c)
        da_o = dh * tc * o * (1.0 - o)
        dc = dc + dh * o * (1.0 - tc * tc)
        if peek_new:
            dc = dc + da_o * v_o
            dv_o += np.sum(da_o * c, axis=0)
        da_i = dc * ct * i * (1.0 - i)
        da_f = dc * c_prev * f * (1.0 - f)
        da_c = dc * i * (1.0 - ct * ct)
        dc_prev = dc * f + da_i * v_i + da_f * v_f
        if not peek_new:
            dc_prev = dc_prev + da_o * v_o
            dv_o += np.sum(da_o * c_prev, axis=0)
        dw_i += np.dot(x, da_i)
        dw_f += np.dot(x, da_f)
        dw_o += np.dot(x, da_o)
        dw_c += np.dot(x, da_c)
        du_i += np.dot(da_i.T, h_prev)
        du_f += np.dot(da_f.T, h_prev)
        du_o += np.dot(da_o.T, h_prev)
        du_c += np.dot(da_c.T, h_prev)
        dv_i += np.sum(da_i * c_prev, axis=0)
        dv_f += np.sum(da_f * c_prev, axis=0)
        dh = (np.dot(da_i, u_i) + np.dot(da_f, u_f) + np.dot(da_o, u_o)
              + np.dot(da_c, u_c))
        dc = dc_prev
    return dw_i, dw_f, dw_o, dw_c, du_i, du_f, du_o, du_c, dv_i, dv_f, dv_o


@_kernel
def gru_forward(xt, w_z, w_r, w_h, u_z, u_r, u_h):
    w, batch = xt.shape
    n = u_z.shape[0]
    gz = np.empty((w, batch, n))
    gr = np.empty((w, batch, n))
    guh = np.empty((w, batch, n))
    ght = np.empty((w, batch, n))
    hs = np.empty((w, batch, n))
    h = np.zeros((batch, n))
    for t in range(w):
        z, r, uh, ht, h = gru_cell(xt[t], h, w_z, w_r, w_h, u_z, u_r, u_h)
        gz[t] = z
        gr[t] = r
        guh[t] = uh
        ght[t] = ht
        hs[t] = h
    return gz, gr, guh, ght, hs


@_kernel
def gru_backward(xt, gz, gr, guh, ght, hs, u_z, u_r, u_h, dh_last):
    w, batch, n = gz.shape
    dw_z = np.zeros(n)
    dw_r = np.zeros(n)
    dw_h = np.zeros(n)
    du_z = np.zeros((n, n))
    du_r = np.zeros((n, n))
    du_h = np.zeros((n, n))
    zero = np.zeros((batch, n))
    dh = dh_last.copy()
    for t in range(w - 1, -1, -1):
        x = xt[t]
        z = gz[t]
        r = gr[t]
        uh = guh[t]
        ht = ght[t]
        if t > 0:
            h_prev = hs[t - 1]
        else:
            h_prev = zero
        da_z = dh * (ht - h_prev) * z * (1.0 - z)
        da_h = dh * z * (1.0 - ht * ht)
        da_r = da_h * uh * r * (1.0 - r)
        duh = da_h * r
        dw_z += np.dot(x, da_z)
        dw_r += np.dot(x, da_r)
        dw_h += np.dot(x, da_h)
        du_z += np.dot(da_z.T, h_prev)
        du_r += np.dot(da_r.T, h_prev)
        du_h += np.dot(duh.T, h_prev)
        dh = (dh * (1.0 - z) + np.dot(da_z, u_z) + np.dot(da_r, u_r)
              + np.dot(duh, u_h))
    return dw_z, dw_r, dw_h, du_z, du_r, du_h
