"""Linear quantities of interest on L^2((0, 1)) in the sine basis
``phi_j(x) = sqrt(2) sin(j pi x)``."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fitting import fit_line
from .spectral_model import CoefficientLabel, CoefficientVector, mode_indices


class QoIKind(str, Enum):
    MEAN_ON_INTERVAL = "mean_on_interval"
    POINT_EVALUATION = "point_evaluation"
    DERIVATIVE_POINT_EVALUATION = "derivative_point_evaluation"
    SYNTHETIC_POWERLAW = "synthetic_powerlaw"


_DECAY = {
    QoIKind.MEAN_ON_INTERVAL: 0.5,
    QoIKind.POINT_EVALUATION: -0.5,
    QoIKind.DERIVATIVE_POINT_EVALUATION: -1.5,
}


@dataclass(frozen=True)
class QoIDescriptor:
    kind: QoIKind
    x0: float | None = None
    r: float | None = None  # synthetic only
    scale: float = 1.0  # synthetic only

    def __post_init__(self):
        object.__setattr__(self, "kind", QoIKind(self.kind))
        if self.kind in (QoIKind.POINT_EVALUATION, QoIKind.DERIVATIVE_POINT_EVALUATION):
            if self.x0 is None or not 0.0 < self.x0 < 1.0:
                raise ValueError(f"x0 must lie in (0, 1), got {self.x0}")
        if self.kind is QoIKind.SYNTHETIC_POWERLAW and self.r is None:
            raise ValueError("synthetic QoI needs a decay exponent r")

    @property
    def decay_exponent(self) -> float:
        """r such that ``|q_j|^2 <~ j^{-2r-1}``."""
        if self.kind is QoIKind.SYNTHETIC_POWERLAW:
            return float(self.r)
        return _DECAY[self.kind]


def qoi_coefficients(descriptor: QoIDescriptor, J: int) -> CoefficientVector:
    """``q_j = q(phi_j)`` for ``j = 1..J``."""
    if int(J) != J or J < 1:
        raise ValueError(f"J must be a positive integer, got {J}")
    j = mode_indices(int(J))
    kind = descriptor.kind
    if kind is QoIKind.MEAN_ON_INTERVAL:
        # cos(j pi) = (-1)^j exactly
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        q = np.sqrt(2.0) * (1.0 - sign) / (j * np.pi)
    elif kind is QoIKind.POINT_EVALUATION:
        q = np.sqrt(2.0) * np.sin(j * np.pi * descriptor.x0)
    elif kind is QoIKind.DERIVATIVE_POINT_EVALUATION:
        q = np.sqrt(2.0) * j * np.pi * np.cos(j * np.pi * descriptor.x0)
    else:
        q = descriptor.scale * j ** (-descriptor.r - 0.5)
    return CoefficientVector(q, CoefficientLabel.QOI_Q)


def evaluate_qoi(descriptor: QoIDescriptor, h, dh=None, n_quad: int = 256) -> float:
    """Apply the functional directly to a callable ``h`` on (0, 1).

    ``dh`` (the derivative) is required for the derivative QoI.
    """
    kind = descriptor.kind
    if kind is QoIKind.MEAN_ON_INTERVAL:
        x, w = np.polynomial.legendre.leggauss(n_quad)
        return float(0.5 * np.sum(w * h(0.5 * (x + 1.0))))
    if kind is QoIKind.POINT_EVALUATION:
        return float(h(descriptor.x0))
    if kind is QoIKind.DERIVATIVE_POINT_EVALUATION:
        if dh is None:
            raise ValueError("derivative QoI needs dh")
        return float(dh(descriptor.x0))
    raise ValueError("synthetic QoI has no function-space form")


def verify_decay(descriptor: QoIDescriptor, J: int) -> tuple[float, float]:
    """Fitted decay exponent from dyadic block maxima of ``|q_j|^2``, and the
    envelope constant ``max_j j^{2r+1} |q_j|^2`` for the stored r.

    Block maxima make the fit insensitive to structured zeros (odd/even
    cancellation, rational x0).
    """
    if J < 256:
        raise ValueError(f"need J >= 256, got {J}")
    q2 = qoi_coefficients(descriptor, J).coeffs ** 2
    j = mode_indices(J)
    xs, ys = [], []
    lo = 1
    while lo <= J:
        hi = min(2 * lo, J + 1)
        block = q2[lo - 1:hi - 1]
        k = int(np.argmax(block))
        if block[k] > 0:
            xs.append(np.log(lo + k))
            ys.append(np.log(block[k]))
        lo = hi
    slope = fit_line(xs, ys).slope
    r = descriptor.decay_exponent
    constant = float(np.max(j ** (2 * r + 1) * q2))
    return float(-(slope + 1.0) / 2.0), constant
