"""Diagonal sequence-space data model.

Every covariance, prior and forward operator shares the eigenbasis
``{phi_j}``, so functions are represented by their coefficient vectors on a
truncation ``j = 1..J``. Power-law relations are realized as exact equalities
``value_j = scale * j**(-2 * half_exponent)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CoefficientLabel(str, Enum):
    TRUTH_F = "truth_f"
    QOI_Q = "qoi_q"
    OPERATOR_L = "operator_l"
    ESTIMATE = "estimate"


class CoefficientLaw(str, Enum):
    """Law of the unit-variance KL coefficients ``z_j``."""

    GAUSSIAN_UNIT = "gaussian_unit"
    UNIFORM_UNIT = "uniform_unit"  # Uniform[-sqrt(3), sqrt(3)]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Spectrum:
    half_exponent: float
    scale: float
    values: np.ndarray = field(repr=False)

    @property
    def truncation(self) -> int:
        return self.values.shape[0]

    @property
    def sqrt(self) -> np.ndarray:
        return np.sqrt(self.values)


@dataclass(frozen=True)
class CoefficientVector:
    coeffs: np.ndarray
    label: CoefficientLabel = CoefficientLabel.ESTIMATE

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "label", CoefficientLabel(self.label))

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def sobolev_norm(self, s: float) -> float:
        """Sequence Sobolev norm ``sqrt(sum_j j^{2s} |v_j|^2)``."""
        j = np.arange(1, len(self) + 1, dtype=float)
        return float(np.sqrt(np.sum(j ** (2.0 * s) * self.coeffs**2)))


@dataclass(frozen=True)
class E2EDataset:
    inputs: np.ndarray  # N x J
    responses: np.ndarray  # N
    noise_level: float

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def truncation(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class FFDataset:
    inputs: np.ndarray  # N x J
    responses: np.ndarray  # N x J, unit noise level

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def truncation(self) -> int:
        return self.inputs.shape[1]


def mode_indices(J: int) -> np.ndarray:
    return np.arange(1, J + 1, dtype=float)


def make_spectrum(half_exponent: float, scale: float = 1.0, J: int = 2048) -> Spectrum:
    """Power-law spectrum ``scale * j**(-2 * half_exponent)`` for ``j = 1..J``."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if int(J) != J or J < 1:
        raise ValueError(f"truncation J must be a positive integer, got {J}")
    values = scale * mode_indices(int(J)) ** (-2.0 * half_exponent)
    return Spectrum(float(half_exponent), float(scale), _frozen(values))


def power_law_truth(exponent: float, J: int, sobolev_s: float | None = None,
                    label=CoefficientLabel.TRUTH_F) -> CoefficientVector:
    """Coefficients ``j**(-exponent)``, optionally rescaled to unit H^s norm."""
    c = mode_indices(J) ** (-float(exponent))
    if sobolev_s is not None:
        j = mode_indices(J)
        c = c / np.sqrt(np.sum(j ** (2.0 * sobolev_s) * c**2))
    return CoefficientVector(c, label)


def draw_unit_coefficients(rng: np.random.Generator, law, N: int, J: int) -> np.ndarray:
    """N x J matrix of iid unit-variance draws.

    Draws are laid out column-block first so that a larger ``J`` extends a
    smaller one: the first ``J`` columns do not depend on the truncation.
    """
    law = CoefficientLaw(law)
    if law is CoefficientLaw.GAUSSIAN_UNIT:
        z = rng.standard_normal((J, N))
    else:
        r3 = np.sqrt(3.0)
        z = rng.uniform(-r3, r3, size=(J, N))
    return np.ascontiguousarray(z.T)


def sample_inputs(spectrum: Spectrum, law=CoefficientLaw.GAUSSIAN_UNIT, N: int = 1,
                  seed: int | np.random.Generator = 0) -> np.ndarray:
    """KL samples ``u_nj = sqrt(sigma_j) z_nj`` as an N x J matrix."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    rng = np.random.default_rng(seed)
    z = draw_unit_coefficients(rng, law, int(N), spectrum.truncation)
    return z * spectrum.sqrt


def _check_inputs(inputs: np.ndarray, J: int) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[0] < 1:
        raise ValueError("inputs must be a nonempty N x J matrix")
    if inputs.shape[1] != J:
        raise ValueError(f"dimension mismatch: inputs have {inputs.shape[1]} columns, expected {J}")
    return inputs


def generate_e2e(f_truth: CoefficientVector, inputs: np.ndarray, gamma: float,
                 seed: int | np.random.Generator = 0) -> E2EDataset:
    """Scalar responses ``y_n = <f, u_n> + gamma * xi_n``."""
    inputs = _check_inputs(inputs, len(f_truth))
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    rng = np.random.default_rng(seed)
    y = inputs @ f_truth.coeffs
    if gamma > 0:
        y = y + gamma * rng.standard_normal(inputs.shape[0])
    return E2EDataset(inputs, y, float(gamma))


def generate_ff(l_truth: CoefficientVector, inputs: np.ndarray,
                seed: int | np.random.Generator = 0) -> FFDataset:
    """Full-field responses ``Y_nj = l_j u_nj + eta_nj`` with unit white noise."""
    inputs = _check_inputs(inputs, len(l_truth))
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(inputs.shape)
    return FFDataset(inputs, inputs * l_truth.coeffs + eta)
