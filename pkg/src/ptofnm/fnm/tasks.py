"""Synthetic 1D tasks for FNM training.

Inputs are random periodic functions with a KL expansion in the real Fourier
basis; models see either the function on the grid or its KL coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import analysis, _mode_weights


def kl_basis(n: int, d_kl: int) -> np.ndarray:
    """``(n, d_kl)`` columns ``sqrt(2) cos(2 pi m x)``, ``sqrt(2) sin(2 pi m x)``, m = 1, 2, ..."""
    x = np.arange(n) / n
    m = np.arange(1, d_kl // 2 + 2)
    cols = np.empty((n, 2 * len(m)))
    cols[:, 0::2] = np.sqrt(2.0) * np.cos(2 * np.pi * np.outer(x, m))
    cols[:, 1::2] = np.sqrt(2.0) * np.sin(2 * np.pi * np.outer(x, m))
    return cols[:, :d_kl]


def kl_std(d_kl: int, decay: float) -> np.ndarray:
    m = np.arange(d_kl) // 2 + 1
    return m.astype(float) ** (-decay)


def sample_kl_functions(N: int, n: int, d_kl: int, decay: float, rng: np.random.Generator):
    """KL coefficients ``(N, d_kl)`` and the sampled functions ``(N, n, 1)``."""
    z = rng.standard_normal((N, d_kl)) * kl_std(d_kl, decay)
    return z, (z @ kl_basis(n, d_kl).T)[:, :, None]


def smoothed_transform(u: np.ndarray, length: float = 0.1, gain: float = 2.0) -> np.ndarray:
    """``tanh(gain * (filter * u))`` with the heat-like filter ``exp(-(2 pi k length)^2 / 2)``."""
    n = u.shape[1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    filt = np.exp(-0.5 * (2 * np.pi * k * length) ** 2)
    w = np.fft.irfft(np.fft.rfft(u, axis=1) * filt[None, :, None], n=n, axis=1)
    return np.tanh(gain * w)


def moments(v: np.ndarray) -> np.ndarray:
    """Grid mean and standard deviation of each function, ``(N, 2)``."""
    mean = v.mean(axis=(1, 2))
    std = np.sqrt(np.mean((v - mean[:, None, None]) ** 2, axis=(1, 2)))
    return np.stack([mean, std], axis=1)


@dataclass
class TaskData:
    coeffs: np.ndarray  # (N, d_kl) vector inputs
    functions: np.ndarray  # (N, n, 1) function inputs
    field: np.ndarray  # (N, n, c) full-field targets
    vector: np.ndarray  # (N, m) end-to-end targets

    def __len__(self):
        return self.coeffs.shape[0]

    def inputs(self, function_input: bool) -> np.ndarray:
        return self.functions if function_input else self.coeffs

    def targets(self, function_output: bool) -> np.ndarray:
        return self.field if function_output else self.vector


def linear_functional(task_seed: int, K: int, out_dim: int = 1) -> np.ndarray:
    """Fixed random complex blocks ``(K+1, out_dim, 1)`` of a linear target."""
    rng = np.random.default_rng([task_seed, 7919])
    P = rng.standard_normal((K + 1, out_dim, 1)) + 1j * rng.standard_normal((K + 1, out_dim, 1))
    P[0] = P[0].real
    return P


def apply_functional(P: np.ndarray, h: np.ndarray) -> np.ndarray:
    K = P.shape[0] - 1
    coef = np.einsum("koi,bki->bko", P, analysis(h, K)).real
    return np.einsum("k,bko->bo", _mode_weights(K), coef)


def make_task(kind: str, N: int, n: int = 64, d_kl: int = 16, decay: float = 1.5,
              seed: int = 0, task_seed: int = 0, K: int = 8) -> TaskData:
    """``kind`` is ``"moments"`` (smoothed nonlinear image and its mean/std),
    ``"identity"`` (output equals input) or ``"linear"`` (a fixed linear
    functional of the input, band-limited to K)."""
    if N < 1:
        raise ValueError(f"need N >= 1 samples, got {N}")
    rng = np.random.default_rng(seed)
    z, u = sample_kl_functions(N, n, d_kl, decay, rng)
    if kind == "moments":
        v = smoothed_transform(u)
        return TaskData(z, u, v, moments(v))
    if kind == "identity":
        return TaskData(z, u, u, moments(u))
    if kind == "linear":
        y = apply_functional(linear_functional(task_seed, K), u)
        return TaskData(z, u, u, y)
    raise ValueError(f"unknown task {kind!r}")


def spectral_features(h: np.ndarray, K: int) -> np.ndarray:
    """Real features ``Re h_0, Re h_k, Im h_k`` (k = 1..K) per channel."""
    hh = analysis(h, K)
    feats = [hh[:, 0].real, hh[:, 1:].real.reshape(len(h), -1), hh[:, 1:].imag.reshape(len(h), -1)]
    return np.concatenate(feats, axis=1)


def spectral_least_squares(h_train, y_train, h_test, K: int) -> np.ndarray:
    """Best linear functional on the first K modes, fitted in closed form."""
    A = spectral_features(h_train, K)
    coef, *_ = np.linalg.lstsq(A, y_train, rcond=None)
    return spectral_features(h_test, K) @ coef
