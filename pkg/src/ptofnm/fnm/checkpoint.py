"""Versioned ``.npz`` checkpoints.

The archive holds a JSON header (format, version, model config, array
manifest) and one little-endian float64 array per real parameter; complex
blocks are split into ``name.re`` / ``name.im``.
"""
from __future__ import annotations

import json

import numpy as np

from .model import FNMConfig, FNMModel, build_model

FORMAT = "fnm-checkpoint"
VERSION = 1


def save_checkpoint(model: FNMModel, path) -> None:
    arrays, manifest = {}, {}
    for name, p in model.parameters().items():
        manifest[name] = {"shape": list(p.shape), "complex": bool(np.iscomplexobj(p))}
        if np.iscomplexobj(p):
            arrays[name + ".re"] = p.real.astype("<f8")
            arrays[name + ".im"] = p.imag.astype("<f8")
        else:
            arrays[name] = p.astype("<f8")
    header = {"format": FORMAT, "version": VERSION, "config": model.config.to_dict(), "arrays": manifest}
    arrays["__header__"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> FNMModel:
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("format") != FORMAT:
            raise ValueError(f"not an FNM checkpoint: {path}")
        if header["version"] > VERSION:
            raise ValueError(f"checkpoint version {header['version']} is newer than supported {VERSION}")
        model = build_model(FNMConfig.from_dict(header["config"]))
        params = model.parameters()
        for name, meta in header["arrays"].items():
            if name not in params:
                raise ValueError(f"unknown parameter {name!r} in checkpoint")
            val = z[name + ".re"] + 1j * z[name + ".im"] if meta["complex"] else z[name]
            if list(val.shape) != list(params[name].shape):
                raise ValueError(f"shape mismatch for {name}: {val.shape} vs {params[name].shape}")
            params[name][...] = val
    return model
