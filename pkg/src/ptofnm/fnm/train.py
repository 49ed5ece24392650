"""Mini-batch Adam training for FNM models."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .losses import loss_relative, loss_squared
from .model import FNMModel, model_forward, model_gradient

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class OptimizerConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0  # L2 penalty added to the gradient
    halve_every: int | None = None  # epochs between learning-rate halvings
    loss: str = "relative"
    seed: int = 0


@dataclass
class TrainResult:
    model: FNMModel
    history: list[float] = field(default_factory=list)  # mean batch loss per epoch


def _real_view(a: np.ndarray) -> np.ndarray:
    # complex blocks are optimized as independent real and imaginary parts
    return a.view(np.float64) if np.iscomplexobj(a) else a


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: OptimizerConfig):
        self.params = {k: _real_view(v) for k, v in params.items()}
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], lr: float):
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for k, p in self.params.items():
            g = _real_view(grads[k])
            if c.weight_decay:
                g = g + c.weight_decay * p
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            p -= lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + c.eps)


def train(model: FNMModel, inputs: np.ndarray, targets: np.ndarray, cfg: OptimizerConfig) -> TrainResult:
    """Train in place; the shuffling stream is seeded by ``cfg.seed``."""
    N = len(inputs)
    if N == 0:
        raise ValueError("empty training set")
    if len(targets) != N:
        raise ValueError(f"{N} inputs but {len(targets)} targets")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.parameters(), cfg)
    history = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr * 0.5 ** (epoch // cfg.halve_every) if cfg.halve_every else cfg.lr
        order = rng.permutation(N)
        losses = []
        for start in range(0, N, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = model_gradient(model, inputs[idx], targets[idx], cfg.loss)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became {loss} at epoch {epoch}, step {opt.t}, lr {lr:g}")
            opt.step(grads, lr)
            losses.append(loss * len(idx))
        history.append(float(np.sum(losses) / N))
        log.debug("epoch %d loss %.3e", epoch, history[-1])
    return TrainResult(model, history)


def evaluate(model: FNMModel, inputs, targets, kind: str = "relative") -> float:
    targets = np.asarray(targets, dtype=float)
    res = targets.shape[1] if model.variant.function_output else None
    pred = model_forward(model, inputs, res)
    return loss_relative(pred, targets) if kind == "relative" else loss_squared(pred, targets)
