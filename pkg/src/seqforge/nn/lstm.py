"""Single-direction LSTM forward and exact reverse-mode backward.

Standard gated cell (input/forget/candidate/output, no peepholes). The
combined weight matrix W has shape (4h, in+h) acting on [x_t; h_{t-1}],
with gates packed in (i, f, g, o) order along the first axis. All math is
float64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmCache:
    """Everything the backward pass needs: inputs, states before each step,
    gate activations, and tanh of the cell state."""

    xs: np.ndarray       # (T, in)
    hs: np.ndarray       # (T+1, h); hs[t] is the state entering step t
    cs: np.ndarray       # (T+1, h)
    gates: np.ndarray    # (T, 4, h) in (i, f, g, o) order
    c_tanh: np.ndarray   # (T, h)


def lstm_forward(W: np.ndarray, b: np.ndarray,
                 xs: np.ndarray) -> tuple[np.ndarray, LstmCache]:
    """Run the cell over `xs` (T, in); returns hidden states (T, h) and the
    cache for the backward pass. Initial h and c are zero."""
    T, d_in = xs.shape
    h = W.shape[0] // 4
    hs = np.zeros((T + 1, h))
    cs = np.zeros((T + 1, h))
    gates = np.empty((T, 4, h))
    c_tanh = np.empty((T, h))
    for t in range(T):
        z = W @ np.concatenate([xs[t], hs[t]]) + b
        i = sigmoid(z[:h])
        f = sigmoid(z[h:2 * h])
        g = np.tanh(z[2 * h:3 * h])
        o = sigmoid(z[3 * h:])
        c = f * cs[t] + i * g
        ct = np.tanh(c)
        gates[t, 0], gates[t, 1], gates[t, 2], gates[t, 3] = i, f, g, o
        cs[t + 1] = c
        c_tanh[t] = ct
        hs[t + 1] = o * ct
    return hs[1:], LstmCache(xs=xs, hs=hs, cs=cs, gates=gates, c_tanh=c_tanh)


def lstm_backward(W: np.ndarray, cache: LstmCache,
                  dhs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagate per-step hidden-state gradients `dhs` (T, h) through
    time; returns (dW, db, dxs)."""
    T, d_in = cache.xs.shape
    h = dhs.shape[1]
    dW = np.zeros_like(W)
    db = np.zeros(4 * h)
    dxs = np.empty_like(cache.xs)
    dh_rec = np.zeros(h)
    dc_rec = np.zeros(h)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache.gates[t]
        ct = cache.c_tanh[t]
        dh = dhs[t] + dh_rec
        do = dh * ct
        dc = dc_rec + dh * o * (1.0 - ct * ct)
        di = dc * g
        df = dc * cache.cs[t]
        dg = dc * i
        dc_rec = dc * f
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        v = np.concatenate([cache.xs[t], cache.hs[t]])
        dW += np.outer(dz, v)
        db += dz
        dv = W.T @ dz
        dxs[t] = dv[:d_in]
        dh_rec = dv[d_in:]
    return dW, db, dxs
