"""Shared oracles for the test suite."""
import numpy as np

from ptofnm.fnm.model import FNMConfig, build_model, model_gradient


def band_limited(n, c, K, B=3, seed=0):
    """Real trigonometric polynomials of degree <= K sampled on n points."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((B, K + 1, c)) + 1j * rng.standard_normal((B, K + 1, c))
    a[:, 0] = a[:, 0].real
    x = np.arange(n) / n
    return np.einsum("bkc,nk->bnc", a, np.exp(2j * np.pi * np.outer(x, np.arange(K + 1)))).real


def flat(grads: dict) -> np.ndarray:
    return np.concatenate([g.view(np.float64).ravel() if np.iscomplexobj(g) else g.ravel()
                           for g in grads.values()])


def fd_gradient(model, x, y, loss, h=1e-5) -> np.ndarray:
    """Central differences over every real scalar of every parameter."""
    out = []
    for p in model.parameters().values():
        v = p.view(np.float64) if np.iscomplexobj(p) else p
        for i in np.ndindex(v.shape):
            old = v[i]
            v[i] = old + h
            lp = model_gradient(model, x, y, loss)[0]
            v[i] = old - h
            lm = model_gradient(model, x, y, loss)[0]
            v[i] = old
            out.append((lp - lm) / (2 * h))
    return np.array(out)


def tiny_problem(variant, seed, n=16, K=3, n_layers=2, B=3):
    rng = np.random.default_rng(seed)
    fi, fo = variant[0] == "F", variant[2] == "F"
    in_dim, out_dim = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    cfg = FNMConfig(variant, in_dim, out_dim, width=int(rng.integers(1, 4)), n_layers=n_layers, modes=K,
                    latent_dim=int(rng.integers(1, 3)), resolution=n, seed=seed)
    model = build_model(cfg)
    for p in model.parameters().values():  # nonzero biases too
        if not np.iscomplexobj(p) and p.ndim == 1:
            p[...] = 0.3 * rng.standard_normal(p.shape)
    x = rng.standard_normal((B, n, in_dim)) if fi else rng.standard_normal((B, in_dim))
    y = rng.standard_normal((B, n, out_dim)) if fo else rng.standard_normal((B, out_dim))
    return model, x, y


def gradient_error(model, x, y, loss) -> float:
    g = flat(model_gradient(model, x, y, loss)[1])
    fd = fd_gradient(model, x, y, loss)
    return float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-300))
