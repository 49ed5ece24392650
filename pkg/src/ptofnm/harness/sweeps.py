"""Rate-verification sweeps, EE-vs-FF comparison and FNM training runs."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..fitting import SlopeFit, fit_loglog_slope
from ..qoi import QoIDescriptor, QoIKind, qoi_coefficients
from ..rates import (ComparisonTable, RateDomainError, RateExponent, RateSpec, compare_exponents,
                     ee_rate_general, ee_rate_optimal, ff_rate_powerlaw)
from ..risk import e2e_conditional_risk, ff_conditional_risk
from ..spectral_model import CoefficientLabel, CoefficientVector, make_spectrum, power_law_truth, sample_inputs

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    kind: str = "ee"
    alpha: float = 1.0
    alpha_prime: float = 1.0
    s: float = 1.0
    p: float | None = None  # None means s + 1/2
    beta: float = 0.5
    r: float = 0.5
    gamma: float = 1.0
    qoi: dict | None = None  # QoIDescriptor fields; default synthetic power law with exponent r
    n_grid: list = field(default_factory=lambda: [2**k for k in range(6, 14)])
    J: int = 2048
    trials: int = 20
    seed: int | None = None
    law: str = "gaussian_unit"
    truth_offset: float = 0.01
    workers: int = 1
    fnm: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("N grid must be strictly increasing")
        if not self.n_grid or self.n_grid[0] < 1:
            raise ValueError("N grid must contain positive sample sizes")
        if self.trials < 1:
            raise ValueError("need at least one trial")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def prior_exponent(self) -> float:
        return self.s + 0.5 if self.p is None else self.p

    def rate_spec(self) -> RateSpec:
        return RateSpec(self.alpha, self.alpha_prime, self.s, self.prior_exponent, self.beta, self.r,
                        self.gamma**2)

    def qoi_descriptor(self) -> QoIDescriptor:
        if self.qoi is None:
            return QoIDescriptor(QoIKind.SYNTHETIC_POWERLAW, r=self.r)
        return QoIDescriptor(**self.qoi)


@dataclass
class SweepResult:
    experiment: str
    n_grid: np.ndarray
    risks: np.ndarray  # (len(n_grid), trials)
    theory: RateExponent
    fit: SlopeFit
    fit_from: int  # first grid index used by the fit
    notes: list[str] = field(default_factory=list)

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.risks, axis=1)

    @property
    def slope(self) -> float:
        return self.fit.slope

    def rows(self):
        for i, N in enumerate(self.n_grid):
            for t, risk in enumerate(self.risks[i]):
                yield dict(experiment=self.experiment, N=int(N), trial=t, risk=float(risk),
                           slope=self.fit.slope, slopeStdErr=self.fit.stderr,
                           theoryExponent=self.theory.exponent, logFlag=self.theory.log_factor)


def _require_seed(config: ExperimentConfig):
    if config.seed is None:
        raise ValueError("sweeps need an explicit seed")


def trial_rng(seed: int, N: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, N, trial])


def _run_grid(config: ExperimentConfig, risk_fn) -> np.ndarray:
    jobs = [(i, N, t) for i, N in enumerate(config.n_grid) for t in range(config.trials)]
    out = np.empty((len(config.n_grid), config.trials))

    def one(job):
        i, N, t = job
        return job, risk_fn(N, trial_rng(config.seed, N, t))

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    for (i, _, t), risk in results:
        out[i, t] = risk
    return out


NAN_FIT = SlopeFit(float("nan"), float("nan"), float("nan"), float("nan"))


def _fit(n_grid, risks, theory: RateExponent, log_divisor: str, notes: list) -> tuple[SlopeFit, int]:
    # upper half of the grid, but never fewer than two points
    start = max(0, min(len(n_grid) // 2, len(n_grid) - 2))
    med = np.median(risks, axis=1)
    n, v = n_grid[start:], med[start:]
    divisor = log_divisor if theory.log_factor else None
    if len(n) < 2 or np.any(v <= 0) or (divisor == "logn" and np.any(n <= 1)):
        notes.append("slope not fitted: need two grid points with positive risk")
        return NAN_FIT, start
    return fit_loglog_slope(n, v, divisor), start


def ee_theory(config: ExperimentConfig) -> RateExponent:
    spec = config.rate_spec()
    if config.p is None or config.p == config.s + 0.5:
        return ee_rate_optimal(spec)
    return ee_rate_general(spec)


def run_ee_sweep(config: ExperimentConfig, *, truth: CoefficientVector | None = None,
                 strict: bool = True, experiment: str = "ee") -> SweepResult:
    """Median conditional EE risk over trials for every N, and its fitted slope."""
    _require_seed(config)
    notes = []
    try:
        theory = ee_theory(config)
    except RateDomainError as exc:
        if strict:
            raise
        notes.append(str(exc))
        theory = RateExponent(float("nan"), False)
    J = config.J
    train = make_spectrum(config.alpha, 1.0, J)
    test = make_spectrum(config.alpha_prime, 1.0, J)
    prior = make_spectrum(config.prior_exponent, 1.0, J)
    if truth is None:
        truth = power_law_truth(config.s + 0.5 + config.truth_offset, J, sobolev_s=config.s)

    def risk(N, rng):
        u = sample_inputs(train, config.law, N, rng)
        return e2e_conditional_risk(truth, u, config.gamma, prior, test, with_spread=False).total

    risks = _run_grid(config, risk)
    n_grid = np.array(config.n_grid)
    fit, start = _fit(n_grid, risks, theory, "log2n", notes)
    return SweepResult(experiment, n_grid, risks, theory, fit, start, notes)


def run_ff_sweep(config: ExperimentConfig, *, strict: bool = True, experiment: str = "ff") -> SweepResult:
    """Median conditional risk of the plug-in FF estimator over trials for every N."""
    _require_seed(config)
    desc = config.qoi_descriptor()
    spec = config.rate_spec()
    spec = RateSpec(spec.alpha, spec.alpha_prime, spec.s, spec.p, spec.beta, desc.decay_exponent, spec.gamma_sq)
    notes = []
    try:
        theory = ff_rate_powerlaw(spec)
    except RateDomainError as exc:
        if strict:
            raise
        notes.append(str(exc))
        theory = RateExponent(float("nan"), False)
    J = config.J
    train = make_spectrum(config.alpha, 1.0, J)
    test = make_spectrum(config.alpha_prime, 1.0, J)
    prior = make_spectrum(config.beta + 0.5, 1.0, J)  # mu_j = j^{-2 beta - 1}
    l_truth = power_law_truth(config.beta + 0.5 + config.truth_offset, J, label=CoefficientLabel.OPERATOR_L)
    q = qoi_coefficients(desc, J)

    def risk(N, rng):
        u = sample_inputs(train, config.law, N, rng)
        return ff_conditional_risk(l_truth, q, u, prior, test).total

    risks = _run_grid(config, risk)
    n_grid = np.array(config.n_grid)
    fit, start = _fit(n_grid, risks, theory, "logn", notes)
    return SweepResult(experiment, n_grid, risks, theory, fit, start, notes)


@dataclass
class ComparisonResult:
    ee: SweepResult
    ff: SweepResult
    table: ComparisonTable
    rho_ee: float
    rho_ff: float
    violations: list[str]

    @property
    def ff_faster(self) -> bool:
        return self.ff.slope < self.ee.slope


def run_comparison(config: ExperimentConfig, *, strict: bool = True,
                   r_grid=None) -> ComparisonResult:
    """EE and FF sweeps on the shared factorized truth ``f_j = q_j l_j``.

    Uses ``alpha' = alpha``, ``s = beta + r + 1/2`` and ``p = s + 1/2``. With
    ``strict=False`` a spec outside the comparison assumptions still runs and
    the violated conditions are reported.
    """
    _require_seed(config)
    base = RateSpec(config.alpha, config.alpha, beta=config.beta, r=config.r, gamma_sq=config.gamma**2)
    violations = base.comparison_violations()
    if violations and strict:
        raise RateDomainError("inadmissible comparison spec, violates " + "; ".join(violations))
    ee_spec = base.comparison_ee_spec()
    shared = dict(config.to_dict(), alpha_prime=config.alpha, s=ee_spec.s, p=ee_spec.p, qoi=None)
    cfg = ExperimentConfig.from_dict(shared)
    J = cfg.J
    l_truth = power_law_truth(cfg.beta + 0.5 + cfg.truth_offset, J)
    q = qoi_coefficients(QoIDescriptor(QoIKind.SYNTHETIC_POWERLAW, r=cfg.r), J)
    f_truth = CoefficientVector(q.coeffs * l_truth.coeffs, CoefficientLabel.TRUTH_F)
    ee = run_ee_sweep(cfg, truth=f_truth, strict=strict, experiment="compare-ee")
    ff = run_ff_sweep(cfg, strict=strict, experiment="compare-ff")
    ab = cfg.alpha + cfg.beta
    if r_grid is None:
        r_grid = np.linspace(-(1 + 2 * ab) / 2 + 0.01, 2.0, 201)
    table = compare_exponents(ab, r_grid)
    rho_e = float(compare_exponents(ab, [cfg.r]).rho_ee[0])
    rho_f = float(compare_exponents(ab, [cfg.r]).rho_ff[0])
    return ComparisonResult(ee, ff, table, rho_e, rho_f, violations)


# ------------------------------------------------------------------ FNM


@dataclass
class FNMRunConfig:
    task: str = "moments"
    variants: list = field(default_factory=lambda: ["F2F", "F2V", "V2F", "V2V"])
    n_grid: list = field(default_factory=lambda: [64, 256, 1024])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    n_test: int = 256
    resolution: int = 64
    d_kl: int = 16
    width: int = 12
    n_layers: int = 2
    modes: int = 8
    steps: int = 2000  # optimizer steps per run, independent of N
    batch_size: int = 32
    lr: float = 3e-3
    loss: str = "relative"

    def __post_init__(self):
        if any(int(n) < 1 for n in self.n_grid):
            raise ValueError("training sizes must be positive")


@dataclass
class FNMRunResult:
    rows: list  # dicts: variant, N, seed, qoi_error, field_error
    config: FNMRunConfig

    def median_errors(self, variant: str, key: str = "qoi_error") -> list[float]:
        out = []
        for N in self.config.n_grid:
            vals = [r[key] for r in self.rows if r["variant"] == variant and r["N"] == N]
            out.append(float(np.median(vals)))
        return out

    def monotone(self, variant: str) -> bool:
        e = self.median_errors(variant)
        return all(b < a for a, b in zip(e, e[1:]))


def run_fnm_synthetic(cfg: FNMRunConfig) -> FNMRunResult:
    """Train each variant on the synthetic task for every N and seed.

    Function-output variants are scored on the QoI of their predicted field
    (mean and standard deviation), so all variants share one error measure.
    """
    from ..fnm.losses import loss_relative
    from ..fnm.model import FNMConfig, Variant, build_model, model_forward
    from ..fnm.tasks import make_task, moments
    from ..fnm.train import OptimizerConfig, train

    rows = []
    test = make_task(cfg.task, cfg.n_test, cfg.resolution, cfg.d_kl, seed=10_000)
    for seed in cfg.seeds:
        for N in cfg.n_grid:
            data = make_task(cfg.task, int(N), cfg.resolution, cfg.d_kl, seed=seed * 1_000 + int(N))
            for name in cfg.variants:
                v = Variant(name)
                in_dim = 1 if v.function_input else cfg.d_kl
                out_dim = data.field.shape[2] if v.function_output else data.vector.shape[1]
                model = build_model(FNMConfig(v, in_dim, out_dim, width=cfg.width, n_layers=cfg.n_layers,
                                              modes=cfg.modes, resolution=cfg.resolution, seed=seed))
                epochs = max(1, int(np.ceil(cfg.steps * cfg.batch_size / N)))
                opt = OptimizerConfig(epochs=epochs, batch_size=cfg.batch_size, lr=cfg.lr,
                                      halve_every=max(1, epochs // 4), loss=cfg.loss, seed=seed)
                train(model, data.inputs(v.function_input), data.targets(v.function_output), opt)
                pred = model_forward(model, test.inputs(v.function_input), cfg.resolution)
                qoi_pred = moments(pred) if v.function_output else pred
                field_err = loss_relative(pred, test.field) if v.function_output else float("nan")
                rows.append(dict(variant=name, N=int(N), seed=seed,
                                 qoi_error=loss_relative(qoi_pred, test.vector), field_error=field_err))
                log.info("%s N=%d seed=%d qoi error %.3e", name, N, seed, rows[-1]["qoi_error"])
    return FNMRunResult(rows, cfg)
