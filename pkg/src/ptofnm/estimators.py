"""Closed-form Gaussian posterior estimators for linear PtO maps.

End-to-end (EE): scalar responses, prior ``f ~ N(0, Lambda)`` with diagonal
``Lambda``; the posterior is solved on the J x J truncation in whitened
coordinates ``C_hat = Lambda^{1/2} Sigma_hat Lambda^{1/2}``.

Full-field (FF): one independent conjugate update per eigenvalue ``l_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .spectral_model import CoefficientLabel, CoefficientVector, E2EDataset, FFDataset, Spectrum

@dataclass(frozen=True)
class WhitenedSystem:
    """Factorized ``M = C_hat + mu I`` for one input sample.

    ``mu == 0`` is the noiseless limit, handled with a pseudo-inverse.
    """

    sqrt_prior: np.ndarray  # sqrt(lambda_j)
    mu: float
    n_samples: int
    gram: np.ndarray  # C_hat
    chol: tuple | None  # cho_factor of M when mu > 0
    eig: tuple | None  # (w, V) of C_hat when mu == 0

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply ``M^{-1}`` (pseudo-inverse when mu == 0)."""
        if self.chol is not None:
            return linalg.cho_solve(self.chol, rhs)
        w, V = self.eig
        inv = np.zeros_like(w)
        keep = w > _rank_tol(w)
        inv[keep] = 1.0 / w[keep]
        proj = V.T @ rhs
        return V @ (proj * (inv[:, None] if proj.ndim == 2 else inv))

    def null_projector_apply(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the projector onto ker(C_hat); zero when mu > 0."""
        if self.eig is None:
            return np.zeros_like(rhs)
        w, V = self.eig
        keep = w <= _rank_tol(w)
        Vk = V[:, keep]
        return Vk @ (Vk.T @ rhs)

    def inverse(self) -> np.ndarray:
        """Dense ``M^{-1}`` (pseudo-inverse when mu == 0)."""
        if self.chol is not None:
            c, lower = self.chol
            inv, info = linalg.lapack.dpotri(c, lower=int(lower))
            if info != 0:
                raise np.linalg.LinAlgError(f"dpotri failed with info={info}")
            inv = np.tril(inv) if lower else np.triu(inv)
            return inv + inv.T - np.diag(np.diag(inv))
        return self.solve(np.eye(self.gram.shape[0]))


def _rank_tol(w: np.ndarray) -> float:
    return max(w.max(initial=0.0), 0.0) * w.shape[0] * np.finfo(float).eps


def whitened_system(inputs: np.ndarray, prior: Spectrum, gamma: float) -> WhitenedSystem:
    inputs = np.asarray(inputs, dtype=float)
    N, J = inputs.shape
    if prior.truncation != J:
        raise ValueError(f"dimension mismatch: prior truncation {prior.truncation} vs J={J}")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    d = np.sqrt(prior.values)
    G = inputs * d
    gram = linalg.blas.dsyrk(1.0 / N, np.asfortranarray(G), trans=1, lower=1)
    gram = np.tril(gram) + np.tril(gram, -1).T
    mu = gamma**2 / N
    if mu > 0:
        M = gram.copy()
        M[np.diag_indices(J)] += mu
        return WhitenedSystem(d, mu, N, gram, linalg.cho_factor(M, lower=True), None)
    return WhitenedSystem(d, 0.0, N, gram, None, np.linalg.eigh(gram))


@dataclass(frozen=True)
class E2EPosterior:
    mean: CoefficientVector
    covariance: np.ndarray  # Lambda^{(N)}, J x J
    gamma: float
    prior: Spectrum


@dataclass(frozen=True)
class FFPosterior:
    means: np.ndarray
    variances: np.ndarray


def e2e_mean(system: WhitenedSystem, inputs: np.ndarray, responses: np.ndarray) -> np.ndarray:
    """Posterior mean(s) for one or several response columns."""
    d = system.sqrt_prior
    rhs = inputs.T @ responses / system.n_samples
    rhs = rhs * (d if rhs.ndim == 1 else d[:, None])
    x = system.solve(rhs)
    return x * (d if x.ndim == 1 else d[:, None])


def e2e_posterior(data: E2EDataset, prior: Spectrum) -> E2EPosterior:
    """Posterior mean and covariance of the EE Gaussian model.

    With ``mu = gamma^2 / N`` and ``D = Lambda^{1/2}``::

        fbar      = D (C_hat + mu I)^{-1} D (sum_n y_n u_n) / N
        Lambda_N  = mu D (C_hat + mu I)^{-1} D

    Both use a Cholesky factorization of the J x J system; when
    ``gamma == 0`` the noiseless limit (pseudo-inverse) is returned.
    """
    system = whitened_system(data.inputs, prior, data.noise_level)
    mean = e2e_mean(system, data.inputs, data.responses)
    d = system.sqrt_prior
    if system.mu > 0:
        cov = system.mu * d[:, None] * system.inverse() * d[None, :]
    else:
        cov = d[:, None] * system.null_projector_apply(np.eye(len(d))) * d[None, :]
    cov = 0.5 * (cov + cov.T)
    return E2EPosterior(CoefficientVector(mean, CoefficientLabel.ESTIMATE), cov,
                        float(data.noise_level), prior)


def ff_sufficient_stats(inputs: np.ndarray, responses: np.ndarray | None = None):
    inputs = np.asarray(inputs, dtype=float)
    suu = np.einsum("nj,nj->j", inputs, inputs)
    if responses is None:
        return suu
    return suu, np.einsum("nj,nj->j", inputs, np.asarray(responses, dtype=float))


def ff_posterior(data: FFDataset, prior: Spectrum) -> FFPosterior:
    """Eigenwise conjugate update with unit noise::

        lbar_j = mu_j * sum_n u_nj Y_nj / (1 + mu_j * sum_n u_nj^2)
        c_j    = mu_j / (1 + mu_j * sum_n u_nj^2)
    """
    if prior.truncation != data.truncation:
        raise ValueError(f"dimension mismatch: prior truncation {prior.truncation} vs J={data.truncation}")
    suu, suy = ff_sufficient_stats(data.inputs, data.responses)
    mu = prior.values
    denom = 1.0 + mu * suu
    return FFPosterior(mu * suy / denom, mu / denom)


def plugin_pto(q: CoefficientVector, ff: FFPosterior) -> CoefficientVector:
    """Coefficients of ``q o Lbar``: entry j is ``q_j * lbar_j``."""
    if len(q) != ff.means.shape[0]:
        raise ValueError(f"dimension mismatch: q has {len(q)} entries, posterior has {ff.means.shape[0]}")
    return CoefficientVector(q.coeffs * ff.means, CoefficientLabel.ESTIMATE)
