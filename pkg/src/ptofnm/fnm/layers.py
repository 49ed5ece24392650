"""Layers of Fourier neural mappings on 1D periodic grids, with reverse mode.

Functions are batched arrays of shape ``(B, n, c)`` sampled at ``x_i = i/n``;
vectors are ``(B, d)``. Spectral weights are complex blocks ``P[k]`` for
``k = 0..K`` only; negative frequencies use ``P[-k] = conj(P[k])``, which
keeps every output real.

Each module has ``forward(x) -> (y, cache)`` and
``backward(cache, gy) -> (gx, grads)``. Gradients of complex parameters use
the convention ``dL/dRe + 1j * dL/dIm``.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


# ------------------------------------------------------------------ DFT helpers

def check_resolution(n: int, K: int):
    if n <= 2 * K:
        raise ValueError(f"grid size n={n} must exceed 2K={2 * K} to avoid aliasing")


def analysis(h: np.ndarray, K: int) -> np.ndarray:
    """Fourier coefficients ``<psi_k, h>`` for ``k = 0..K`` (1/n normalization)."""
    n = h.shape[1]
    check_resolution(n, K)
    return np.fft.rfft(h, axis=1)[:, :K + 1] / n


def analysis_backward(g_hat: np.ndarray, n: int) -> np.ndarray:
    B, k1, c = g_hat.shape
    X = np.zeros((B, n // 2 + 1, c), dtype=complex)
    X[:, :k1] = g_hat
    X[:, 1:k1] *= 0.5
    return np.fft.irfft(X, n=n, axis=1)


def synthesis(coef: np.ndarray, n: int) -> np.ndarray:
    """Real function ``sum_{|k|<=K} c_k psi_k`` on n points from ``c_0..c_K``."""
    B, k1, c = coef.shape
    check_resolution(n, k1 - 1)
    X = np.zeros((B, n // 2 + 1, c), dtype=complex)
    X[:, :k1] = n * coef
    return np.fft.irfft(X, n=n, axis=1)


def synthesis_backward(g: np.ndarray, K: int) -> np.ndarray:
    G = np.fft.rfft(g, axis=1)[:, :K + 1]
    G[:, 1:] *= 2.0
    return G


def _mode_weights(K: int) -> np.ndarray:
    w = np.full(K + 1, 2.0)
    w[0] = 1.0
    return w


# ------------------------------------------------------------------ activations

def gelu(x):
    return x * ndtr(x)


def gelu_grad(x):
    return ndtr(x) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


ACTIVATIONS = {
    "gelu": (gelu, gelu_grad),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
}


def _activation(name: str):
    if name not in ACTIVATIONS:
        raise ValueError(f"unknown activation {name!r}")
    return ACTIVATIONS[name]


# ------------------------------------------------------------------ init

def complex_block(rng: np.random.Generator, K: int, d_out: int, d_in: int) -> np.ndarray:
    """iid complex Gaussian with ``E|P|^2 = 1 / (d_in (2K + 1))``.

    The k = 0 block is real (variance doubled), as conjugate symmetry demands;
    its imaginary part receives zero gradient and stays zero.
    """
    std = np.sqrt(0.5 / (d_in * (2 * K + 1)))
    shape = (K + 1, d_out, d_in)
    P = std * rng.standard_normal(shape) + 1j * std * rng.standard_normal(shape)
    P[0] = np.sqrt(2.0) * P[0].real
    return P


def glorot(rng: np.random.Generator, d_out: int, d_in: int) -> np.ndarray:
    a = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-a, a, size=(d_out, d_in))


# ------------------------------------------------------------------ modules

class Module:
    params: dict

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, gy):
        raise NotImplementedError


class Dense(Module):
    """Affine map on the last axis; pointwise when applied to functions."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, activation: str = "identity"):
        self.params = {"W": glorot(rng, d_out, d_in), "b": np.zeros(d_out)}
        self.activation = activation

    def forward(self, x):
        pre = x @ self.params["W"].T + self.params["b"]
        act, _ = _activation(self.activation)
        return act(pre), (x, pre)

    def backward(self, cache, gy):
        x, pre = cache
        g = gy * _activation(self.activation)[1](pre)
        g2 = g.reshape(-1, g.shape[-1])
        grads = {"W": g2.T @ x.reshape(-1, x.shape[-1]), "b": g2.sum(axis=0)}
        return g @ self.params["W"], grads


class FourierLayer(Module):
    """``v -> act(W v + K v + b)`` with ``K v = sum_{|k|<=K} P_k <psi_k, v> psi_k``."""

    def __init__(self, d_in: int, d_out: int, K: int, rng: np.random.Generator, activation: str = "gelu"):
        self.K = K
        self.activation = activation
        self.params = {"P": complex_block(rng, K, d_out, d_in), "W": glorot(rng, d_out, d_in),
                       "b": np.zeros(d_out)}

    def forward(self, v):
        n = v.shape[1]
        v_hat = analysis(v, self.K)
        coef = np.einsum("koi,bki->bko", self.params["P"], v_hat)
        pre = synthesis(coef, n) + v @ self.params["W"].T + self.params["b"]
        return _activation(self.activation)[0](pre), (v, v_hat, pre)

    def backward(self, cache, gy):
        v, v_hat, pre = cache
        n = v.shape[1]
        g = gy * _activation(self.activation)[1](pre)
        g_coef = synthesis_backward(g, self.K)
        P = self.params["P"]
        grads = {
            "P": np.einsum("bko,bki->koi", g_coef, v_hat.conj()),
            "W": np.einsum("bno,bni->oi", g, v),
            "b": g.sum(axis=(0, 1)),
        }
        g_hat = np.einsum("koi,bko->bki", P.conj(), g_coef)
        gv = analysis_backward(g_hat, n) + g @ self.params["W"]
        return gv, grads


class FunctionalLayer(Module):
    """Linear functional ``h -> Re sum_{|k|<=K} P_k <psi_k, h>`` (d channels to m)."""

    def __init__(self, d: int, m: int, K: int, rng: np.random.Generator):
        self.K = K
        self.params = {"P": complex_block(rng, K, m, d)}

    def forward(self, h):
        h_hat = analysis(h, self.K)
        w = _mode_weights(self.K)
        out = np.einsum("k,bko->bo", w, np.einsum("koi,bki->bko", self.params["P"], h_hat).real)
        return out, (h.shape[1], h_hat)

    def backward(self, cache, gy):
        n, h_hat = cache
        w = _mode_weights(self.K)
        g_coef = w[None, :, None] * gy[:, None, :]  # real
        grads = {"P": np.einsum("bko,bki->koi", g_coef, h_hat.conj())}
        g_hat = np.einsum("koi,bko->bki", self.params["P"].conj(), g_coef)
        return analysis_backward(g_hat, n), grads


class DecoderLayer(Module):
    """Vector to function ``z -> Re sum_{|k|<=K} (P_k z) psi_k`` (m to d channels)."""

    def __init__(self, m: int, d: int, K: int, rng: np.random.Generator, n: int | None = None):
        self.K = K
        self.n = n
        self.params = {"P": complex_block(rng, K, d, m)}

    def forward(self, z, n: int | None = None):
        n = n or self.n
        if n is None:
            raise ValueError("decoder needs an output resolution")
        coef = np.einsum("koi,bi->bko", self.params["P"], z)
        return synthesis(coef, n), z

    def backward(self, cache, gy):
        z = cache
        g_coef = synthesis_backward(gy, self.K)
        grads = {"P": np.einsum("bko,bi->koi", g_coef, z)}
        gz = np.einsum("koi,bko->bi", self.params["P"].conj(), g_coef).real
        return gz, grads


class WBranch(Module):
    """``h -> mean_x NN(h(x))`` with one hidden GELU layer of width d."""

    def __init__(self, d: int, m: int, rng: np.random.Generator):
        self.params = {"W1": glorot(rng, d, d), "b1": np.zeros(d), "W2": glorot(rng, m, d), "b2": np.zeros(m)}

    def forward(self, h):
        p = self.params
        pre = h @ p["W1"].T + p["b1"]
        a = gelu(pre)
        out = a.mean(axis=1) @ p["W2"].T + p["b2"]
        return out, (h, pre, a)

    def backward(self, cache, gy):
        h, pre, a = cache
        p = self.params
        n = h.shape[1]
        grads = {"W2": gy.T @ a.mean(axis=1), "b2": gy.sum(axis=0)}
        ga = np.broadcast_to((gy @ p["W2"])[:, None, :] / n, a.shape)
        gp = ga * gelu_grad(pre)
        grads["W1"] = np.einsum("bno,bni->oi", gp, h)
        grads["b1"] = gp.sum(axis=(0, 1))
        return gp @ p["W1"], grads


class VectorHead(Module):
    """Concatenation ``(G h, W h)`` feeding the vector output map."""

    def __init__(self, d: int, m: int, K: int, rng: np.random.Generator, w_branch: bool = True):
        self.functional = FunctionalLayer(d, m, K, rng)
        self.branch = WBranch(d, m, rng) if w_branch else None
        self.params = {"G." + k: v for k, v in self.functional.params.items()}
        if self.branch is not None:
            self.params.update({"W." + k: v for k, v in self.branch.params.items()})

    @property
    def out_dim(self) -> int:
        m = self.functional.params["P"].shape[1]
        return 2 * m if self.branch is not None else m

    def forward(self, h):
        g_out, g_cache = self.functional.forward(h)
        if self.branch is None:
            return g_out, (g_cache, None)
        w_out, w_cache = self.branch.forward(h)
        return np.concatenate([g_out, w_out], axis=1), (g_cache, w_cache)

    def backward(self, cache, gy):
        g_cache, w_cache = cache
        m = self.functional.params["P"].shape[1]
        gh, g_grads = self.functional.backward(g_cache, gy[:, :m])
        grads = {"G." + k: v for k, v in g_grads.items()}
        if self.branch is not None:
            gh_w, w_grads = self.branch.backward(w_cache, gy[:, m:])
            gh = gh + gh_w
            grads.update({"W." + k: v for k, v in w_grads.items()})
        return gh, grads
