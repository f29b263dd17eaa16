"""LSTM cell and masked batch recurrence with manual backpropagation.

Gate pre-activations are laid out as ``[i | f | g | o]`` blocks of width
``d_h`` along the last axis of ``Wx`` (d_in x 4d_h), ``Wh`` (d_h x 4d_h)
and ``b`` (4d_h).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LSTMWeights:
    Wx: np.ndarray
    Wh: np.ndarray
    b: np.ndarray

    @property
    def hidden(self):
        return self.Wh.shape[0]


def _gates(w: LSTMWeights, x, h_prev):
    d = w.hidden
    z = x @ w.Wx + h_prev @ w.Wh + w.b
    i = sigmoid(z[..., :d])
    f = sigmoid(z[..., d:2 * d])
    g = np.tanh(z[..., 2 * d:3 * d])
    o = sigmoid(z[..., 3 * d:])
    return i, f, g, o


def lstm_step(weights: LSTMWeights, x, h_prev, c_prev):
    """One LSTM transition; returns ``(h_t, c_t)``."""
    for name, v in (("x", x), ("h_prev", h_prev), ("c_prev", c_prev)):
        if not np.all(np.isfinite(v)):
            raise NumericError(f"non-finite LSTM input {name}", tensor=name)
    i, f, g, o = _gates(weights, x, h_prev)
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def run(weights: LSTMWeights, X, M):
    """Masked recurrence over ``X`` (B, T, d_in) with mask ``M`` (B, T).

    Padded steps carry the previous state forward, so the state at the
    last time index is the state after each row's final real token.
    Returns ``(H, cache)`` with ``H`` of shape (B, T, d_h).
    """
    B, T, _ = X.shape
    d = weights.hidden
    h = np.zeros((B, d))
    c = np.zeros((B, d))
    H = np.empty((B, T, d))
    steps = []
    for t in range(T):
        x = X[:, t]
        m = M[:, t:t + 1]
        i, f, g, o = _gates(weights, x, h)
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        steps.append((x, h, c, i, f, g, o, tc, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        H[:, t] = h
    return H, steps


def run_backward(weights: LSTMWeights, steps, dH, dh_last=None):
    """Backpropagate through :func:`run`.

    ``dH`` is the loss gradient with respect to every output state and
    ``dh_last`` an extra gradient on the final state.  Returns
    ``(dWx, dWh, db, dX)``.
    """
    B, T, d = dH.shape
    dWx = np.zeros_like(weights.Wx)
    dWh = np.zeros_like(weights.Wh)
    db = np.zeros_like(weights.b)
    dX = np.empty((B, T, weights.Wx.shape[0]))
    dh_next = np.zeros((B, d)) if dh_last is None else dh_last.copy()
    dc_next = np.zeros((B, d))
    for t in reversed(range(T)):
        x, h_prev, c_prev, i, f, g, o, tc, m = steps[t]
        dh = dH[:, t] + dh_next
        dh_new = m * dh
        dc_new = m * dc_next + dh_new * o * (1.0 - tc * tc)
        do = dh_new * tc
        di = dc_new * g
        dg = dc_new * i
        df = dc_new * c_prev
        dz = np.concatenate([di * i * (1.0 - i), df * f * (1.0 - f),
                             dg * (1.0 - g * g), do * o * (1.0 - o)], axis=1)
        dWx += x.T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dX[:, t] = dz @ weights.Wx.T
        dh_next = (1.0 - m) * dh + dz @ weights.Wh.T
        dc_next = (1.0 - m) * dc_next + dc_new * f
    return dWx, dWh, db, dX
