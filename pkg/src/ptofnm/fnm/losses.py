"""Relative and squared losses.

Functions ``(B, n, c)`` use the quadrature norm ``sqrt((1/n) sum_i |h(x_i)|^2)``;
vectors ``(B, d)`` use the Euclidean norm.
"""
from __future__ import annotations

import numpy as np

EPS = 1e-6


def _sq_norms(a: np.ndarray) -> np.ndarray:
    if a.ndim == 3:
        return np.sum(a**2, axis=(1, 2)) / a.shape[1]
    if a.ndim == 2:
        return np.sum(a**2, axis=1)
    raise ValueError(f"expected a batch of vectors or functions, got shape {a.shape}")


def _check(pred, true):
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    return pred, true


def loss_relative(pred, true) -> float:
    pred, true = _check(pred, true)
    return float(np.mean(np.sqrt(_sq_norms(pred - true)) / (np.sqrt(_sq_norms(true)) + EPS)))


def loss_squared(pred, true) -> float:
    pred, true = _check(pred, true)
    return float(np.mean(_sq_norms(pred - true)))


def loss_and_grad(pred, true, kind: str = "relative"):
    """Loss value and its gradient with respect to ``pred``."""
    pred, true = _check(pred, true)
    B = pred.shape[0]
    e = pred - true
    quad = 1.0 / pred.shape[1] if pred.ndim == 3 else 1.0
    shape = (B,) + (1,) * (pred.ndim - 1)
    if kind == "squared":
        return loss_squared(pred, true), 2.0 * quad * e / B
    if kind == "relative":
        en = np.sqrt(_sq_norms(e))
        denom = np.sqrt(_sq_norms(true)) + EPS
        safe = np.where(en > 0, en, 1.0)
        scale = np.where(en > 0, quad / (safe * denom * B), 0.0)
        return float(np.mean(en / denom)), e * scale.reshape(shape)
    raise ValueError(f"unknown loss {kind!r}")
