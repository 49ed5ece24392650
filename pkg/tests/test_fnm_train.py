import numpy as np
import pytest

from ptofnm.fnm.losses import EPS, loss_and_grad, loss_relative, loss_squared
from ptofnm.fnm.model import FNMConfig, build_model, model_gradient
from ptofnm.fnm.tasks import (apply_functional, linear_functional, make_task, moments, spectral_least_squares,
                              smoothed_transform)
from ptofnm.fnm.train import OptimizerConfig, TrainingDivergedError, evaluate, train


# ------------------------------------------------------------------ losses

def test_loss_scalar_arithmetic():
    pred, true = np.array([[3.0]]), np.array([[1.0]])
    assert loss_squared(pred, true) == 4.0
    assert loss_relative(pred, true) == 2.0 / (1.0 + 1e-6)


def test_relative_loss_guard():
    pred = np.array([[1e-6, 0.0]])
    assert loss_relative(pred, np.zeros((1, 2))) == pytest.approx(1.0, rel=1e-12)


def test_relative_loss_exact_fit_is_zero():
    y = np.random.default_rng(0).standard_normal((4, 8, 2))
    assert loss_relative(y, y) == 0.0
    assert np.all(loss_and_grad(y, y, "relative")[1] == 0.0)


def test_function_norm_is_quadrature():
    # constant 2 on any grid has L2 norm 2
    pred = np.full((1, 32, 1), 2.0)
    assert loss_squared(pred, np.zeros_like(pred)) == pytest.approx(4.0)
    assert loss_relative(np.zeros_like(pred), pred) == pytest.approx(2.0 / (2.0 + EPS))


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        loss_relative(np.zeros((2, 3)), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        loss_and_grad(np.zeros((2, 3)), np.zeros((2, 3)), "huber")


@pytest.mark.parametrize("kind", ["relative", "squared"])
@pytest.mark.parametrize("shape", [(3, 4), (3, 8, 2)])
def test_loss_gradient_central_difference(kind, shape):
    rng = np.random.default_rng(1)
    pred, true = rng.standard_normal(shape), rng.standard_normal(shape)
    g = loss_and_grad(pred, true, kind)[1]
    fd = np.zeros_like(pred)
    h = 1e-6
    for i in np.ndindex(shape):
        e = np.zeros_like(pred)
        e[i] = h
        fd[i] = (loss_and_grad(pred + e, true, kind)[0] - loss_and_grad(pred - e, true, kind)[0]) / (2 * h)
    assert np.allclose(g, fd, atol=1e-8)


# ------------------------------------------------------------------ training

def _linear_f2f():
    return build_model(FNMConfig("F2F", 1, 1, width=4, n_layers=1, modes=3, resolution=16))


def _data(rng, N=16, n=16):
    return rng.standard_normal((N, n, 1))


def test_same_seed_same_history():
    x = _data(np.random.default_rng(0))
    y = np.sin(x)
    cfg = OptimizerConfig(epochs=5, batch_size=4, lr=1e-2, seed=3)
    a = train(_linear_f2f(), x, y, cfg).history
    b = train(_linear_f2f(), x, y, cfg).history
    assert a == b
    c = train(_linear_f2f(), x, y, OptimizerConfig(epochs=5, batch_size=4, lr=1e-2, seed=4)).history
    assert a != c


def test_zero_target_monotone_to_tiny_loss():
    x = _data(np.random.default_rng(0))
    cfg = OptimizerConfig(epochs=3000, batch_size=16, lr=1e-3, halve_every=500, loss="squared")
    h = np.array(train(_linear_f2f(), x, np.zeros_like(x), cfg).history)
    assert np.all(np.diff(h) <= 0)
    assert h[-1] < 1e-6


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_divergence_raises():
    x = _data(np.random.default_rng(0))
    with pytest.raises(TrainingDivergedError, match="epoch"):
        train(_linear_f2f(), x, 1e300 * np.ones_like(x), OptimizerConfig(epochs=3, loss="squared"))


def test_empty_and_mismatched_datasets():
    with pytest.raises(ValueError):
        train(_linear_f2f(), np.zeros((0, 16, 1)), np.zeros((0, 16, 1)), OptimizerConfig())
    with pytest.raises(ValueError):
        train(_linear_f2f(), np.zeros((3, 16, 1)), np.zeros((2, 16, 1)), OptimizerConfig())


def test_adam_first_step():
    # after one bias-corrected step each real scalar moves by lr * g / (|g| + eps)
    x = _data(np.random.default_rng(2), N=4)
    y = np.cos(x)
    model = _linear_f2f()
    before = {k: v.copy() for k, v in model.parameters().items()}
    g = model_gradient(model, x, y, "relative")[1]
    cfg = OptimizerConfig(epochs=1, batch_size=4, lr=0.01)
    train(model, x, y, cfg)
    for k, p in model.parameters().items():
        gk = g[k].view(np.float64) if np.iscomplexobj(g[k]) else g[k]
        p0 = before[k].view(np.float64) if np.iscomplexobj(p) else before[k]
        p1 = p.view(np.float64) if np.iscomplexobj(p) else p
        assert np.allclose(p1, p0 - cfg.lr * gk / (np.abs(gk) + cfg.eps), atol=1e-15)


def test_weight_decay_shrinks_unused_parameters():
    x = np.zeros((4, 16, 1))
    model = _linear_f2f()
    w0 = model.parameters()["project.W"].copy()
    train(model, x, np.zeros_like(x), OptimizerConfig(epochs=50, lr=1e-2, weight_decay=1.0, loss="squared"))
    assert np.linalg.norm(model.parameters()["project.W"]) < np.linalg.norm(w0)


def test_evaluate_matches_loss():
    x = _data(np.random.default_rng(0))
    model = _linear_f2f()
    assert evaluate(model, x, x, "squared") == pytest.approx(model_gradient(model, x, x, "squared")[0])


# ------------------------------------------------------------------ tasks

def test_make_task_shapes_and_targets():
    d = make_task("moments", 5, n=32, d_kl=6, seed=1)
    assert d.functions.shape == (5, 32, 1) and d.coeffs.shape == (5, 6) and d.vector.shape == (5, 2)
    assert np.array_equal(d.field, smoothed_transform(d.functions))
    assert np.array_equal(d.vector, moments(d.field))
    assert np.allclose(d.vector[:, 1], d.field[..., 0].std(axis=1))
    ident = make_task("identity", 3, n=32, seed=1)
    assert np.array_equal(ident.field, ident.functions)


def test_make_task_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_task("moments", 0)
    with pytest.raises(ValueError):
        make_task("cubic", 4)


def test_kl_coefficients_reconstruct_functions():
    d = make_task("identity", 4, n=64, d_kl=10, seed=2)
    # orthonormal basis under the grid quadrature
    rec = np.einsum("bn,bnk->bk", d.functions[..., 0], np.broadcast_to(
        np.stack([np.sqrt(2) * f(2 * np.pi * m * np.arange(64) / 64) for m in range(1, 6)
                  for f in (np.cos, np.sin)], axis=1), (4, 64, 10))) / 64
    assert np.allclose(rec, d.coeffs, atol=1e-12)


def test_spectral_least_squares_recovers_linear_target():
    train_d = make_task("linear", 64, seed=0)
    test_d = make_task("linear", 16, seed=1)
    pred = spectral_least_squares(train_d.functions, train_d.vector, test_d.functions, 8)
    assert loss_relative(pred, test_d.vector) <= 1e-10
    assert np.allclose(apply_functional(linear_functional(0, 8), test_d.functions), test_d.vector)
