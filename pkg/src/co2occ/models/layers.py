"""Numpy layer primitives with explicit forward caches and backward passes.

All passes are batch-vectorized; recurrent layers loop only over the
(short, post-pooling) time axis. Float64 throughout so that analytic
gradients can be verified against central finite differences.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Valid 1-D convolution. x (B,T,Ci), w (K,Ci,Co) -> y (B,T-K+1,Co)."""
    B, T, _ = x.shape
    K, _, Co = w.shape
    t_out = T - K + 1
    y = np.broadcast_to(b, (B, t_out, Co)).copy()
    for k in range(K):
        y += x[:, k:k + t_out, :] @ w[k]
    return y, (x, w)


def conv1d_backward(dy: np.ndarray, cache):
    x, w = cache
    K, Ci, Co = w.shape
    t_out = dy.shape[1]
    dx = np.zeros_like(x)
    dw = np.empty_like(w)
    dy_flat = dy.reshape(-1, Co)
    for k in range(K):
        dw[k] = x[:, k:k + t_out, :].reshape(-1, Ci).T @ dy_flat
        dx[:, k:k + t_out, :] += dy @ w[k].T
    db = dy_flat.sum(axis=0)
    return dx, dw, db


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return dy * mask


def maxpool1d_forward(x: np.ndarray, factor: int):
    """Non-overlapping max pooling along time; trailing remainder dropped."""
    B, T, C = x.shape
    t_out = T // factor
    xr = x[:, :t_out * factor, :].reshape(B, t_out, factor, C)
    idx = xr.argmax(axis=2)
    y = np.take_along_axis(xr, idx[:, :, None, :], axis=2).squeeze(axis=2)
    return y, (x.shape, factor, idx)


def maxpool1d_backward(dy: np.ndarray, cache) -> np.ndarray:
    shape, factor, idx = cache
    B, T, C = shape
    t_out = idx.shape[1]
    dxr = np.zeros((B, t_out, factor, C))
    np.put_along_axis(dxr, idx[:, :, None, :], dy[:, :, None, :], axis=2)
    dx = np.zeros(shape)
    dx[:, :t_out * factor, :] = dxr.reshape(B, t_out * factor, C)
    return dx


def lstm_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray,
                 reverse: bool = False):
    """One LSTM direction over x (B,T,I); gate order i,f,g,o in the 4u axis.

    Returns h at every original time position; for reverse=True position t
    holds the state after consuming inputs T-1..t.
    """
    B, T, I = x.shape
    u = wh.shape[0]
    xp = (x.reshape(B * T, I) @ wx).reshape(B, T, 4 * u)
    order = range(T - 1, -1, -1) if reverse else range(T)

    H = np.empty((B, T, u))
    gates = np.empty((B, T, 4 * u))   # post-activation i,f,g,o
    cells = np.empty((B, T, u))
    tanh_c = np.empty((B, T, u))
    h_prev = np.empty((B, T, u))
    c_prev = np.empty((B, T, u))
    h = np.zeros((B, u))
    c = np.zeros((B, u))
    for t in order:
        z = xp[:, t] + h @ wh + b
        i_g = sigmoid(z[:, :u])
        f_g = sigmoid(z[:, u:2 * u])
        g_g = np.tanh(z[:, 2 * u:3 * u])
        o_g = sigmoid(z[:, 3 * u:])
        h_prev[:, t] = h
        c_prev[:, t] = c
        c = f_g * c + i_g * g_g
        tc = np.tanh(c)
        h = o_g * tc
        gates[:, t, :u] = i_g
        gates[:, t, u:2 * u] = f_g
        gates[:, t, 2 * u:3 * u] = g_g
        gates[:, t, 3 * u:] = o_g
        cells[:, t] = c
        tanh_c[:, t] = tc
        H[:, t] = h
    cache = (x, wx, wh, reverse, gates, cells, tanh_c, h_prev, c_prev)
    return H, cache


def lstm_backward(dH: np.ndarray, cache):
    """Backpropagation through time; dH holds gradients w.r.t. every
    emitted state (zeros where the state is unused)."""
    x, wx, wh, reverse, gates, cells, tanh_c, h_prev, c_prev = cache
    B, T, I = x.shape
    u = wh.shape[0]
    order = range(T) if reverse else range(T - 1, -1, -1)

    dxp = np.empty((B, T, 4 * u))
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * u)
    dh_carry = np.zeros((B, u))
    dc_carry = np.zeros((B, u))
    for t in order:
        i_g = gates[:, t, :u]
        f_g = gates[:, t, u:2 * u]
        g_g = gates[:, t, 2 * u:3 * u]
        o_g = gates[:, t, 3 * u:]
        tc = tanh_c[:, t]

        dh = dH[:, t] + dh_carry
        dc = dc_carry + dh * o_g * (1.0 - tc * tc)
        dz = np.empty((B, 4 * u))
        dz[:, :u] = dc * g_g * i_g * (1.0 - i_g)
        dz[:, u:2 * u] = dc * c_prev[:, t] * f_g * (1.0 - f_g)
        dz[:, 2 * u:3 * u] = dc * i_g * (1.0 - g_g * g_g)
        dz[:, 3 * u:] = dh * tc * o_g * (1.0 - o_g)

        dxp[:, t] = dz
        dwh += h_prev[:, t].T @ dz
        db += dz.sum(axis=0)
        dh_carry = dz @ wh.T
        dc_carry = dc * f_g
    dwx = x.reshape(B * T, I).T @ dxp.reshape(B * T, 4 * u)
    dx = (dxp.reshape(B * T, 4 * u) @ wx.T).reshape(B, T, I)
    return dx, dwx, dwh, db


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b, (x, w)


def dense_backward(dy: np.ndarray, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def dropout_forward(x: np.ndarray, p: float, train_mode: bool,
                    rng: np.random.Generator | None):
    """Inverted dropout: identity outside train mode."""
    if not train_mode or p == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return dy
    return dy * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)
