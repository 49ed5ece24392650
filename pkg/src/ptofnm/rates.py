"""Theoretical convergence-rate exponents and series oracles.

Every rate is reported as ``RateExponent(exponent, log_factor)`` meaning the
squared error decays like ``N**(-exponent)``, times a logarithm when
``log_factor`` is set.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import integrate, linalg

from .fitting import SlopeFit, fit_loglog_slope
from .spectral_model import CoefficientVector


class RateDomainError(ValueError):
    """Raised when a rate is requested outside its assumptions."""


class RateExponent(NamedTuple):
    exponent: float
    log_factor: bool


@dataclass(frozen=True)
class RateSpec:
    alpha: float
    alpha_prime: float
    s: float = 0.0
    p: float = 1.0
    beta: float = 0.0
    r: float = 0.0
    gamma_sq: float = 1.0

    # each check returns the list of violated conditions
    def ee_violations(self, optimal: bool = False) -> list[str]:
        out = []
        if not self.alpha > 0.5:
            out.append("data decay: alpha > 1/2")
        if not self.alpha_prime >= 0:
            out.append("data decay: alpha' >= 0")
        if optimal:
            if not self.s > 0:
                out.append("truth regularity: s > 0 for the optimized prior p = s + 1/2")
        else:
            if not self.s >= 0:
                out.append("truth regularity: s >= 0")
            if not self.p > 0.5:
                out.append("prior decay: p > 1/2")
        if not self.alpha + self.s > 1:
            out.append("truth regularity: alpha + s > 1")
        if not self.gamma_sq > 0:
            out.append("noise level: gamma^2 > 0")
        return out

    def ff_powerlaw_violations(self) -> list[str]:
        out = []
        if not self.alpha > 0.5:
            out.append("data decay: alpha > 1/2")
        if not self.alpha_prime >= 0:
            out.append("data decay: alpha' >= 0")
        if not min(self.alpha, self.alpha_prime + self.r + 0.5) + self.beta > 0:
            out.append("QoI decay: min(alpha, alpha' + r + 1/2) + beta > 0")
        return out

    def ff_sobolev_violations(self) -> list[str]:
        out = []
        if not self.alpha > 0.5:
            out.append("data decay: alpha > 1/2")
        if not self.alpha_prime >= 0:
            out.append("data decay: alpha' >= 0")
        if not min(self.alpha, self.alpha_prime + self.r) + self.beta > 0:
            out.append("Sobolev QoI: min(alpha, alpha' + r) + beta > 0")
        return out

    def comparison_violations(self) -> list[str]:
        out = []
        if not self.alpha > 0.5:
            out.append("data decay: alpha > 1/2")
        if self.alpha_prime != self.alpha:
            out.append("comparison: alpha' = alpha (in-distribution)")
        if not self.beta + self.r + 0.5 > 0:
            out.append("comparison: beta + r + 1/2 > 0")
        if not self.alpha + self.beta + self.r > 0.5:
            out.append("comparison: alpha + beta + r > 1/2")
        if not self.alpha + self.beta > 0:
            out.append("comparison: alpha + beta > 0")
        return out

    def comparison_ee_spec(self) -> "RateSpec":
        """EE spec implied by the comparison: s = beta + r + 1/2, p = s + 1/2."""
        s = self.beta + self.r + 0.5
        return RateSpec(self.alpha, self.alpha, s, s + 0.5, self.beta, self.r, self.gamma_sq)


def _require(violations: list[str]):
    if violations:
        raise RateDomainError("inadmissible spec, violates " + "; ".join(violations))


def _exact(*xs):
    # exact rationals so case splits and algebraic reductions hold bitwise
    return [Fraction(float(x)) for x in xs]


def ee_rate_optimal(spec: RateSpec) -> RateExponent:
    """EE rate with the optimized prior exponent ``p = s + 1/2``."""
    _require(spec.ee_violations(optimal=True))
    a, ap, s = _exact(spec.alpha, spec.alpha_prime, spec.s)
    half = Fraction(1, 2)
    if ap < a + half:
        return RateExponent(float((2 * ap + 2 * s) / (1 + 2 * a + 2 * s)), False)
    if ap == a + half:
        return RateExponent(1.0, True)
    return RateExponent(1.0, False)


def ee_rate_general(spec: RateSpec) -> RateExponent:
    """EE rate for an arbitrary prior exponent ``p > 1/2``."""
    _require(spec.ee_violations(optimal=False))
    a, ap, s, p = _exact(spec.alpha, spec.alpha_prime, spec.s, spec.p)
    half = Fraction(1, 2)
    bias_exp = (ap + s) / (a + p)
    if ap < a + half:
        return RateExponent(float(min(bias_exp, 1 - (a + half - ap) / (a + p))), False)
    if ap == a + half:
        # max(N^-bias_exp, N^-1 log 2N): the log term wins once bias_exp >= 1
        return RateExponent(float(min(bias_exp, 1)), bias_exp >= 1)
    return RateExponent(float(min(bias_exp, 1)), False)


def ff_rate_powerlaw(spec: RateSpec) -> RateExponent:
    """FF plug-in rate for a QoI with ``|q_j|^2 <~ j^{-2r-1}``."""
    _require(spec.ff_powerlaw_violations())
    a, ap, b, r = _exact(spec.alpha, spec.alpha_prime, spec.beta, spec.r)
    if ap + r < a:
        return RateExponent(float((1 + 2 * ap + 2 * b + 2 * r) / (1 + 2 * a + 2 * b)), False)
    if ap + r == a:
        return RateExponent(1.0, True)
    return RateExponent(1.0, False)


def ff_rate_sobolev(spec: RateSpec) -> RateExponent:
    """FF plug-in rate for a QoI in the Sobolev-like space of order r."""
    _require(spec.ff_sobolev_violations())
    a, ap, b, r = _exact(spec.alpha, spec.alpha_prime, spec.beta, spec.r)
    half = Fraction(1, 2)
    if ap + r < a + half:
        return RateExponent(float((2 * ap + 2 * b + 2 * r) / (1 + 2 * a + 2 * b)), False)
    if ap + r == a + half:
        return RateExponent(1.0, True)
    return RateExponent(1.0, False)


def rho_ee(alpha_plus_beta: float, r):
    return 1.0 - 1.0 / (2.0 + 2.0 * alpha_plus_beta + 2.0 * np.asarray(r, dtype=float))


def rho_ff(alpha_plus_beta: float, r):
    return 1.0 - 2.0 * np.maximum(-np.asarray(r, dtype=float), 0.0) / (1.0 + 2.0 * alpha_plus_beta)


@dataclass(frozen=True)
class ComparisonTable:
    alpha_plus_beta: float
    r: np.ndarray
    rho_ee: np.ndarray
    rho_ff: np.ndarray
    admissible: np.ndarray  # r > r0
    ff_log: np.ndarray  # r == 0
    r0: float
    rho0: float
    r1: float
    rho1: float

    def rows(self):
        return [dict(r=float(r), rho_ee=float(e), rho_ff=float(f), admissible=bool(ok), ff_log=bool(lg))
                for r, e, f, ok, lg in zip(self.r, self.rho_ee, self.rho_ff, self.admissible, self.ff_log)]


def compare_exponents(alpha_plus_beta: float, r_grid) -> ComparisonTable:
    """EE and FF rate exponents as functions of the QoI decay exponent r,
    together with their two crossing points."""
    ab = float(alpha_plus_beta)
    if not ab > 0:
        raise RateDomainError("comparison requires alpha + beta > 0")
    r = np.asarray(r_grid, dtype=float)
    r0 = -(1.0 + 2.0 * ab) / 2.0
    ok = r > r0
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(ok, rho_ee(ab, r), np.nan)
        ff = np.where(ok, rho_ff(ab, r), np.nan)
    return ComparisonTable(ab, r, ee, ff, ok, r == 0, r0, 0.0, -0.5, 2.0 * ab / (1.0 + 2.0 * ab))


# ---------------------------------------------------------------- series oracles

@dataclass(frozen=True)
class SeriesValue:
    value: float
    error_bound: float  # certified bound on |value - infinite sum|
    truncation: int


_CHUNK = 1 << 20


def _partial_sum(term, J: int) -> float:
    total = 0.0
    for start in range(1, J + 1, _CHUNK):
        j = np.arange(start, min(start + _CHUNK, J + 1), dtype=float)
        total += float(np.sum(term(j)))
    return total


def _tail_integral(term, a: float):
    """``int_a^inf term(x) dx`` after the substitution ``x = a e^s``."""
    def g(s):
        x = a * np.exp(s)
        return x * float(term(np.array([x]))[0])

    # e^600 keeps a * e^s finite; the integrand is negligible well before
    return integrate.quad(g, 0.0, 600.0, epsabs=0.0, epsrel=1e-10, limit=500, points=[1.0, 10.0, 100.0])


def certified_series(term, J_min: int = 1 << 20, rtol: float = 1e-6, J_max: int = 1 << 28) -> SeriesValue:
    """Infinite sum of a positive term that is nonincreasing from ``J_min`` on.

    The tail beyond J is bracketed by ``[int_{J+1}^inf, int_J^inf]`` and its
    midpoint is added; J grows until the half-width is below ``rtol``
    relative to the total.
    """
    J = int(J_min)
    while True:
        partial = _partial_sum(term, J)
        hi, e_hi = _tail_integral(term, J)
        lo, e_lo = _tail_integral(term, J + 1)
        value = partial + 0.5 * (hi + lo)
        err = 0.5 * (hi - lo) + e_hi + e_lo
        if err <= rtol * value or J >= J_max:
            return SeriesValue(value, err, J)
        J *= 4


def _monotone_start(N: float, t: float, u: float, v: float) -> int:
    # j^{-t} (1 + N j^{-u})^{-v} decreases once N j^{-u} <= t / (u v)
    if v == 0:
        return 1
    return int(np.ceil((N * u * v / t) ** (1.0 / u))) + 1 if t > 0 else int(np.ceil(N ** (1.0 / u))) + 1


def series_oracle_sobolev(xi: CoefficientVector, t: float, u: float, v: float, q: float, N: float):
    """Truncated ``sum_j j^{-t} xi_j^2 / (1 + N j^{-u})^v`` and the rate factor
    ``N^{-min(v, (t+2q)/u)} ||xi||_{H^q}^2``."""
    if not t >= -2 * q:
        raise ValueError("need t >= -2q")
    if not u > 0:
        raise ValueError("need u > 0")
    if not v >= 0:
        raise ValueError("need v >= 0")
    j = np.arange(1, len(xi) + 1, dtype=float)
    x2 = xi.coeffs**2
    total = float(np.sum(j ** (-t) * x2 / (1.0 + N * j ** (-u)) ** v))
    bound = float(N ** (-min(v, (t + 2 * q) / u)) * np.sum(j ** (2 * q) * x2))
    return total, bound


def powerlaw_case(t: float, u: float, v: float) -> RateExponent:
    """Predicted decay of ``sum_j j^{-t} / (1 + N j^{-u})^v`` in N."""
    c = (t - 1.0) / u
    if c < v:
        return RateExponent(c, False)
    if c == v:
        return RateExponent(v, True)
    return RateExponent(v, False)


def series_oracle_powerlaw(t: float, u: float, v: float, N: float, *, J_min: int = 1 << 20,
                           rtol: float = 1e-6):
    """``(sum, predicted exponent, log flag)`` for the power-law series."""
    if not t > 1:
        raise ValueError("need t > 1")
    if not u > 0:
        raise ValueError("need u > 0")
    if not v >= 0:
        raise ValueError("need v >= 0")

    def term(j):
        return j ** (-t) / (1.0 + N * j ** (-u)) ** v

    start = max(J_min, _monotone_start(N, t, u, v))
    sv = certified_series(term, start, rtol)
    pred = powerlaw_case(t, u, v)
    return sv.value, pred.exponent, pred.log_factor


def effective_dimension(alpha: float, p: float, mu_grid, *, J_min: int = 1 << 20,
                        rtol: float = 1e-6) -> list[tuple[float, float]]:
    """``tr(C_mu^{-1} C) = sum_j c_j / (c_j + mu)`` with ``c_j = j^{-2(alpha+p)}``."""
    u = 2.0 * (alpha + p)
    if not u > 1:
        raise ValueError("need alpha + p > 1/2")
    out = []
    for mu in mu_grid:
        if not mu > 0:
            raise ValueError("need mu > 0")

        def term(j, mu=mu):
            c = j ** (-u)
            return c / (c + mu)

        out.append((float(mu), certified_series(term, J_min, rtol).value))
    return out


def fit_series_slope(n_grid, values, log_factor: bool = False) -> SlopeFit:
    return fit_loglog_slope(n_grid, values, "log2n" if log_factor else None)


def regularized_inverse_residual(A: np.ndarray, B: np.ndarray, lam: float) -> float:
    """Relative operator-norm gap between ``(A + lam I)^{-1}`` and
    ``B_l^{-1/2} (I - B_l^{-1/2} (B - A) B_l^{-1/2})^{-1} B_l^{-1/2}``."""
    n = A.shape[0]
    eye = np.eye(n)
    direct = linalg.solve(A + lam * eye, eye, assume_a="pos")
    w, V = linalg.eigh(B + lam * eye)
    b_isqrt = (V / np.sqrt(w)) @ V.T
    inner = eye - b_isqrt @ (B - A) @ b_isqrt
    via = b_isqrt @ linalg.solve(inner, b_isqrt)
    return float(np.linalg.norm(direct - via, 2) / np.linalg.norm(direct, 2))
