"""Noise-averaged out-of-distribution prediction risks.

All risks are conditional on the training inputs and averaged analytically
over the observation noise. The Monte-Carlo routine at the bottom exists only
to validate the closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import e2e_mean, ff_sufficient_stats, whitened_system
from .spectral_model import CoefficientVector, Spectrum

# N above which the EE variance switches from columnwise solves to the J x J identity
COLUMNS_MAX_N = 4096


@dataclass(frozen=True)
class RiskReport:
    total: float
    bias: float
    variance: float
    spread: float | None = None


def _check(vec: CoefficientVector, inputs: np.ndarray, *spectra: Spectrum) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=float)
    J = len(vec)
    if inputs.ndim != 2 or inputs.shape[1] != J:
        raise ValueError(f"dimension mismatch: inputs {inputs.shape} vs J={J}")
    for sp in spectra:
        if sp.truncation != J:
            raise ValueError(f"dimension mismatch: spectrum truncation {sp.truncation} vs J={J}")
    return inputs


def e2e_conditional_risk(f_truth: CoefficientVector, inputs: np.ndarray, gamma: float,
                         prior: Spectrum, test_spectrum: Spectrum, *,
                         variance_method: str = "auto", with_spread: bool = True) -> RiskReport:
    """Bias, variance and posterior spread of the EE posterior mean.

    ``variance_method`` is ``"columns"`` (posterior map applied to the N
    canonical response vectors), ``"identity"`` (J x J expression
    ``mu * sum_j sigma'_j lambda_j [(M^-1)_jj - mu (M^-2)_jj]``) or
    ``"auto"`` (columns when N <= 4096).
    """
    inputs = _check(f_truth, inputs, prior, test_spectrum)
    N = inputs.shape[0]
    system = whitened_system(inputs, prior, gamma)
    sig_t = test_spectrum.values
    f = f_truth.coeffs

    mean_map = e2e_mean(system, inputs, inputs @ f)
    bias = float(np.sum(sig_t * (f - mean_map) ** 2))

    if variance_method == "auto":
        variance_method = "columns" if N <= COLUMNS_MAX_N else "identity"
    if variance_method not in ("columns", "identity"):
        raise ValueError(f"unknown variance method {variance_method!r}")

    weights = sig_t * prior.values
    spread = None
    if gamma == 0:
        variance = 0.0
        if with_spread:
            null_diag = np.diag(system.null_projector_apply(np.eye(len(f))))
            spread = float(np.sum(weights * null_diag))
    elif variance_method == "columns":
        d = system.sqrt_prior
        A = d[:, None] * system.solve(d[:, None] * inputs.T) / N  # J x N
        variance = float(gamma**2 * np.sum(sig_t[:, None] * A**2))
        if with_spread:
            minv_diag = np.diag(system.inverse())
            spread = float(system.mu * np.sum(weights * minv_diag))
    else:
        minv = system.inverse()
        mu = system.mu
        diag1 = np.diag(minv)
        diag2 = np.einsum("ij,ij->j", minv, minv)
        variance = float(mu * np.sum(weights * (diag1 - mu * diag2)))
        spread = float(mu * np.sum(weights * diag1)) if with_spread else None
    return RiskReport(bias + variance, bias, variance, spread)


def ff_moments(l_truth: np.ndarray, suu: np.ndarray, mu: np.ndarray):
    """Shrinkage factor and noise variance of ``lbar_j`` given ``sum_n u_nj^2``."""
    denom = 1.0 + mu * suu
    rho = mu * suu / denom
    var = mu**2 * suu / denom**2
    return rho, var


def ff_conditional_risk(l_truth: CoefficientVector, qoi: CoefficientVector, inputs: np.ndarray,
                        prior: Spectrum, test_spectrum: Spectrum) -> RiskReport:
    """Risk of the plug-in estimator ``q o Lbar``::

        sum_j sigma'_j q_j^2 [ (1 - rho_j)^2 l_j^2 + Var(lbar_j) ]
    """
    inputs = _check(l_truth, inputs, prior, test_spectrum)
    if len(qoi) != len(l_truth):
        raise ValueError(f"dimension mismatch: qoi has {len(qoi)} entries, J={len(l_truth)}")
    suu = ff_sufficient_stats(inputs)
    rho, var = ff_moments(l_truth.coeffs, suu, prior.values)
    w = test_spectrum.values * qoi.coeffs**2
    bias = float(np.sum(w * (1.0 - rho) ** 2 * l_truth.coeffs**2))
    variance = float(np.sum(w * var))
    return RiskReport(bias + variance, bias, variance)


@dataclass(frozen=True)
class MCRiskCheck:
    analytic: float
    mc_estimate: float
    mc_stderr: float

    def within(self, n_stderr: float = 4.0) -> bool:
        return abs(self.analytic - self.mc_estimate) <= n_stderr * self.mc_stderr + 1e-14 * abs(self.analytic)


def mc_risk_check(kind: str, params: dict, replicates: int, seed: int = 0,
                  chunk: int = 512) -> MCRiskCheck:
    """Compare the analytic conditional risk with a noise Monte-Carlo average.

    ``kind="ee"`` expects ``f_truth, inputs, gamma, prior, test_spectrum``;
    ``kind="ff"`` expects ``l_truth, qoi, inputs, prior, test_spectrum``.
    Inputs stay fixed; only the observation noise is redrawn.
    """
    if replicates < 100:
        raise ValueError(f"need at least 100 noise replicates, got {replicates}")
    rng = np.random.default_rng(seed)
    inputs = np.asarray(params["inputs"], dtype=float)
    N, J = inputs.shape
    sig_t = params["test_spectrum"].values
    losses = []

    if kind == "ee":
        f = params["f_truth"].coeffs
        gamma = float(params["gamma"])
        analytic = e2e_conditional_risk(params["f_truth"], inputs, gamma, params["prior"],
                                        params["test_spectrum"], with_spread=False).total
        system = whitened_system(inputs, params["prior"], gamma)
        clean = inputs @ f
        done = 0
        while done < replicates:
            r = min(chunk, replicates - done)
            Y = clean[:, None] + gamma * rng.standard_normal((N, r))
            fbar = e2e_mean(system, inputs, Y)
            losses.append(np.sum(sig_t[:, None] * (f[:, None] - fbar) ** 2, axis=0))
            done += r
    elif kind == "ff":
        l_true = params["l_truth"].coeffs
        q = params["qoi"].coeffs
        mu = params["prior"].values
        analytic = ff_conditional_risk(params["l_truth"], params["qoi"], inputs, params["prior"],
                                       params["test_spectrum"]).total
        suu = ff_sufficient_stats(inputs)
        denom = 1.0 + mu * suu
        w = sig_t * q**2
        for _ in range(replicates):
            Y = inputs * l_true + rng.standard_normal((N, J))
            lbar = mu * np.einsum("nj,nj->j", inputs, Y) / denom
            losses.append(np.array([np.sum(w * (l_true - lbar) ** 2)]))
    else:
        raise ValueError(f"unknown risk kind {kind!r}")

    losses = np.concatenate(losses)
    est = float(losses.mean())
    stderr = float(losses.std(ddof=1) / np.sqrt(losses.size))
    return MCRiskCheck(float(analytic), est, stderr)
