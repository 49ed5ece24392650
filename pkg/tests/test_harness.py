import json

import numpy as np
import pytest

from ptofnm.harness.report import emit_report, read_csv, results_from_rows, summary, write_csv
from ptofnm.harness.sweeps import (ExperimentConfig, FNMRunConfig, SweepResult, run_comparison, run_ee_sweep,
                                   run_ff_sweep, run_fnm_synthetic)
from ptofnm.rates import RateDomainError, RateExponent
from ptofnm.fitting import SlopeFit

SMALL = dict(J=64, n_grid=[8, 16, 32, 64], trials=3, seed=7)


# ------------------------------------------------------------------ config

@pytest.mark.parametrize("bad", [dict(n_grid=[16, 8]), dict(n_grid=[8, 8]), dict(n_grid=[0, 4]),
                                 dict(trials=0), dict(nonsense=1)])
def test_config_validation(bad):
    with pytest.raises((ValueError, TypeError)):
        ExperimentConfig.from_dict(bad)


def test_config_round_trip():
    cfg = ExperimentConfig(**SMALL)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.prior_exponent == 1.5


@pytest.mark.parametrize("fn", [run_ee_sweep, run_ff_sweep, run_comparison])
def test_sweeps_require_seed(fn):
    with pytest.raises(ValueError, match="seed"):
        fn(ExperimentConfig(**dict(SMALL, seed=None)))


def test_inadmissible_specs_rejected():
    with pytest.raises(RateDomainError):
        run_ee_sweep(ExperimentConfig(**dict(SMALL, alpha=0.4)))
    with pytest.raises(RateDomainError):
        run_comparison(ExperimentConfig(**dict(SMALL, alpha=0.55, beta=0.45, r=-0.9)))


# ------------------------------------------------------------------ sweeps

def test_ee_sweep_shapes_and_decrease():
    res = run_ee_sweep(ExperimentConfig(**SMALL))
    assert res.risks.shape == (4, 3) and np.all(res.risks > 0)
    assert np.all(np.diff(res.medians) < 0)
    assert res.theory == RateExponent(0.8, False)
    assert res.fit_from == 2 and np.isfinite(res.slope)


def test_ee_noiseless_collapse():
    # gamma = 0 and N >= J: the posterior mean interpolates the truncated truth
    cfg = ExperimentConfig(**dict(SMALL, gamma=0.0, n_grid=[16, 64, 128]))
    res = run_ee_sweep(cfg, strict=False)
    assert np.all(res.risks[1:] <= 1e-9 * res.risks[0].min())
    assert res.risks[0].min() > 0


def test_ff_sweep_starting_at_one_sample():
    res = run_ff_sweep(ExperimentConfig(**dict(SMALL, kind="ff", n_grid=[1, 2, 4, 8])))
    assert np.all(np.isfinite(res.risks))
    one = run_ff_sweep(ExperimentConfig(**dict(SMALL, kind="ff", n_grid=[1])))
    assert np.isnan(one.slope) and one.notes


def test_workers_do_not_change_results():
    a = run_ff_sweep(ExperimentConfig(**dict(SMALL, kind="ff")))
    b = run_ff_sweep(ExperimentConfig(**dict(SMALL, kind="ff", workers=3)))
    assert np.array_equal(a.risks, b.risks)


def test_ff_sweep_with_catalog_qoi():
    cfg = ExperimentConfig(**dict(SMALL, kind="ff", qoi={"kind": "mean_on_interval"}))
    res = run_ff_sweep(cfg)
    assert res.theory.exponent == pytest.approx(1.0)


def test_comparison_small():
    res = run_comparison(ExperimentConfig(**dict(SMALL, alpha=1.0, beta=0.0, r=1.0)))
    assert res.violations == []
    assert res.rho_ff == 1.0 and res.rho_ee == pytest.approx(5 / 6)
    assert res.ee.experiment == "compare-ee" and res.ff.experiment == "compare-ff"
    assert len(res.table.r) == 201


@pytest.mark.parametrize("kind,r", [("ee", 0.5), ("ff", -0.25), ("ff", 0.5)])
def test_doubling_J_changes_risk_below_one_percent(kind, r):
    # largest N of the default grid, one trial
    risks = []
    for J in (2048, 4096):
        cfg = ExperimentConfig(kind=kind, r=r, J=J, n_grid=[2**13], trials=1, seed=1)
        risks.append((run_ee_sweep if kind == "ee" else run_ff_sweep)(cfg).risks[0, 0])
    assert abs(risks[1] / risks[0] - 1) < 0.01


# ------------------------------------------------------------------ report

def _fake(name, n=(4, 8), trials=2):
    risks = np.arange(1, len(n) * trials + 1, dtype=float).reshape(len(n), trials) / 7
    return SweepResult(name, np.array(n), risks, RateExponent(0.8, True), SlopeFit(-0.7, 0.01, 0.0, 1.0), 1)


def test_empty_sweep_header_only(tmp_path):
    write_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "experiment,N,trial,risk,slope,slopeStdErr,theoryExponent,logFlag\n"
    assert read_csv(tmp_path / "e.csv") == []


def test_csv_round_trip(tmp_path):
    results = [_fake("ee"), _fake("ff", n=(2, 4, 8), trials=3)]
    write_csv(results, tmp_path / "r.csv")
    rows = read_csv(tmp_path / "r.csv")
    assert rows == [row for res in results for row in res.rows()]
    back = results_from_rows(rows)
    for a, b in zip(results, back):
        assert np.array_equal(a.risks, b.risks) and np.array_equal(a.n_grid, b.n_grid)
        assert (a.fit.slope, a.theory) == (b.fit.slope, b.theory)


def test_identical_config_byte_identical_csv(tmp_path):
    for i in range(2):
        emit_report([run_ee_sweep(ExperimentConfig(**SMALL))], tmp_path / str(i), formats=("csv",))
    assert (tmp_path / "0/report.csv").read_bytes() == (tmp_path / "1/report.csv").read_bytes()


def test_svg_one_polyline_per_family(tmp_path):
    paths = emit_report([_fake("ee"), _fake("ff")], tmp_path)
    svg = paths["svg"].read_text()
    assert svg.count("<polyline") == 2
    assert 'data-family="ee"' in svg and 'data-family="ff"' in svg
    assert set(paths) == {"csv", "json", "svg"}


def test_json_summary_handles_nan(tmp_path):
    res = _fake("ee")
    res.fit = SlopeFit(float("nan"), float("nan"), float("nan"), float("nan"))
    paths = emit_report([res], tmp_path, formats=("json",))
    data = json.loads(paths["json"].read_text())
    assert data["ee"]["slope"] is None and data["ee"]["fit_from_N"] == 8
    assert summary([res])["ee"]["median_risk"] == pytest.approx(list(res.medians))


def test_report_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path, formats=("pdf",))
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_report([], blocker / "sub")


# ------------------------------------------------------------------ FNM runs

def test_fnm_run_rejects_zero_samples():
    with pytest.raises(ValueError):
        FNMRunConfig(n_grid=[0, 64])


def test_fnm_run_small():
    cfg = FNMRunConfig(n_grid=[8, 16], seeds=[0], n_test=8, resolution=32, d_kl=4, width=2, n_layers=1,
                       modes=3, steps=3, batch_size=4)
    res = run_fnm_synthetic(cfg)
    assert len(res.rows) == 2 * 4
    assert all(np.isfinite(r["qoi_error"]) for r in res.rows)
    f_rows = [r for r in res.rows if r["variant"] in ("F2F", "V2F")]
    assert all(np.isfinite(r["field_error"]) for r in f_rows)
    assert len(res.median_errors("F2V")) == 2


def test_identity_task_f2f_accurate():
    cfg = FNMRunConfig(task="identity", variants=["F2F"], n_grid=[256], seeds=[0])
    row = run_fnm_synthetic(cfg).rows[0]
    assert row["field_error"] < 1e-2
