"""The four Fourier neural mapping variants and their composition.

Wiring (S lift, L Fourier layers, D decoder, G functional head, Q output map):

    F2F:  function -> S (pointwise) -> L ... L -> Q (pointwise) -> function
    F2V:  function -> S (pointwise) -> L ... L -> (G, W) -> Q -> vector
    V2F:  vector   -> S -> D -> L ... L -> Q (pointwise) -> function
    V2V:  vector   -> S -> D -> L ... L -> (G, W) -> Q -> vector

Function-output variants use the identity activation on their last Fourier
layer; every other Fourier layer defaults to GELU.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .losses import loss_and_grad
from .layers import DecoderLayer, Dense, FourierLayer, Module, VectorHead


class Variant(str, Enum):
    F2F = "F2F"
    F2V = "F2V"
    V2F = "V2F"
    V2V = "V2V"

    @property
    def function_input(self) -> bool:
        return self.value[0] == "F"

    @property
    def function_output(self) -> bool:
        return self.value[2] == "F"


@dataclass
class FNMConfig:
    variant: Variant
    in_dim: int  # channels for function input, length for vector input
    out_dim: int
    width: int = 16  # channels of the latent functions
    n_layers: int = 2  # number of Fourier layers
    modes: int = 8  # K
    latent_dim: int | None = None  # decoder input / functional output size, default width
    resolution: int = 64  # output or latent grid for vector-input variants
    w_branch: bool = True
    activations: list[str] | None = None
    seed: int = 0

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.latent_dim is None:
            self.latent_dim = self.width
        if self.activations is None:
            acts = ["gelu"] * self.n_layers
            if self.variant.function_output and acts:
                acts[-1] = "identity"
            self.activations = acts
        if len(self.activations) != self.n_layers:
            raise ValueError("need one activation per Fourier layer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FNMConfig":
        return cls(**d)


class FNMModel:
    """A sequential stack of modules with flat named parameters."""

    def __init__(self, config: FNMConfig, modules: list[tuple[str, Module]]):
        self.config = config
        self.modules = modules

    @property
    def variant(self) -> Variant:
        return self.config.variant

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{name}.{k}": v for name, mod in self.modules for k, v in mod.params.items()}

    def forward(self, x, resolution: int | None = None):
        caches = []
        for name, mod in self.modules:
            if name == "decoder":
                x, cache = mod.forward(x, resolution or self.config.resolution)
            else:
                x, cache = mod.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, gy) -> dict[str, np.ndarray]:
        grads = {}
        for (name, mod), cache in zip(reversed(self.modules), reversed(caches)):
            gy, g = mod.backward(cache, gy)
            grads.update({f"{name}.{k}": v for k, v in g.items()})
        return {k: grads[k] for k in self.parameters()}


def build_model(config: FNMConfig) -> FNMModel:
    rng = np.random.default_rng(config.seed)
    c = config
    mods: list[tuple[str, Module]] = []
    if c.variant.function_input:
        mods.append(("lift", Dense(c.in_dim, c.width, rng)))
    else:
        mods.append(("lift", Dense(c.in_dim, c.latent_dim, rng)))
        mods.append(("decoder", DecoderLayer(c.latent_dim, c.width, c.modes, rng)))
    for t, act in enumerate(c.activations):
        mods.append((f"fourier{t}", FourierLayer(c.width, c.width, c.modes, rng, act)))
    if c.variant.function_output:
        mods.append(("project", Dense(c.width, c.out_dim, rng)))
    else:
        head = VectorHead(c.width, c.latent_dim, c.modes, rng, c.w_branch)
        mods.append(("head", head))
        mods.append(("project", Dense(head.out_dim, c.out_dim, rng)))
    return FNMModel(config, mods)


def _check_input(model: FNMModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c = model.config
    if c.variant.function_input:
        if x.ndim != 3 or x.shape[2] != c.in_dim:
            raise ValueError(f"{c.variant.value} expects (B, n, {c.in_dim}) input, got {x.shape}")
    elif x.ndim != 2 or x.shape[1] != c.in_dim:
        raise ValueError(f"{c.variant.value} expects (B, {c.in_dim}) input, got {x.shape}")
    return x


def model_forward(model: FNMModel, x, resolution: int | None = None) -> np.ndarray:
    """Evaluate the model; ``resolution`` sets the grid for vector inputs."""
    return model.forward(_check_input(model, x), resolution)[0]


def model_gradient(model: FNMModel, x, y, loss_kind: str = "relative"):
    """``(loss, grads)`` with grads keyed like ``model.parameters()``."""
    x = _check_input(model, x)
    y = np.asarray(y, dtype=float)
    resolution = y.shape[1] if model.variant.function_output else None
    pred, caches = model.forward(x, resolution)
    loss, g = loss_and_grad(pred, y, loss_kind)
    return loss, model.backward(caches, g)
