"""Ordinary least squares on log-log data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    r_squared: float


def fit_line(x, y) -> SlopeFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two matching points")
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = x.size - 2
    sxx = np.sum((x - x.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else float("nan")
    sst = np.sum((y - y.mean()) ** 2)
    r2 = float(1.0 - np.sum(resid**2) / sst) if sst > 0 else 1.0
    return SlopeFit(float(coef[1]), stderr, float(coef[0]), r2)


def fit_loglog_slope(n, values, log_divisor: str | None = None) -> SlopeFit:
    """Slope of ``log(values)`` against ``log(n)``.

    ``log_divisor`` divides out a logarithmic factor first: ``"log2n"`` for
    ``log(2N)``, ``"logn"`` for ``log(N)`` (requires N > 1).
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("log-log fit needs positive values")
    if log_divisor == "log2n":
        v = v / np.log(2.0 * n)
    elif log_divisor == "logn":
        if np.any(n <= 1):
            raise ValueError("log(N) divisor needs N > 1")
        v = v / np.log(n)
    elif log_divisor is not None:
        raise ValueError(f"unknown log divisor {log_divisor!r}")
    return fit_line(np.log(n), np.log(v))
