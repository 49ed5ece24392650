import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptofnm.spectral_model import (CoefficientLaw, CoefficientVector, generate_e2e, generate_ff, make_spectrum,
                                   power_law_truth, sample_inputs)


def test_spectrum_values():
    sp = make_spectrum(1.0, 2.0, 4)
    assert np.allclose(sp.values, 2.0 * np.array([1, 2, 3, 4], float) ** -2.0)
    assert sp.truncation == 4


@pytest.mark.parametrize("scale,J", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, 2.5)])
def test_spectrum_rejects_bad_args(scale, J):
    with pytest.raises(ValueError):
        make_spectrum(1.0, scale, J)


def test_coefficient_vector_validation():
    with pytest.raises(ValueError):
        CoefficientVector(np.ones((2, 2)))
    with pytest.raises(ValueError):
        CoefficientVector([1.0, np.nan])
    v = CoefficientVector([3.0, 4.0])
    assert v.sobolev_norm(0) == pytest.approx(5.0)


def test_power_law_truth_unit_sobolev_norm():
    f = power_law_truth(1.51, 512, sobolev_s=1.0)
    assert f.sobolev_norm(1.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("law", list(CoefficientLaw))
def test_inputs_have_target_variance(law):
    sp = make_spectrum(0.5, 1.0, 8)
    u = sample_inputs(sp, law, 200_000, seed=3)
    assert np.allclose(u.var(axis=0) / sp.values, 1.0, atol=0.02)
    if law is CoefficientLaw.UNIFORM_UNIT:
        assert np.all(np.abs(u / sp.sqrt) <= np.sqrt(3.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**31))
def test_inputs_are_prefix_consistent_in_truncation(N, J1, extra, seed):
    small = sample_inputs(make_spectrum(1.0, 1.0, J1), "gaussian_unit", N, seed)
    big = sample_inputs(make_spectrum(1.0, 1.0, J1 + extra), "gaussian_unit", N, seed)
    assert np.array_equal(big[:, :J1], small)


def test_sample_inputs_rejects_empty():
    with pytest.raises(ValueError):
        sample_inputs(make_spectrum(1.0, 1.0, 4), N=0)


def test_generate_e2e_noiseless_and_errors():
    f = CoefficientVector([1.0, -2.0])
    u = np.array([[1.0, 1.0], [0.5, 2.0]])
    d = generate_e2e(f, u, 0.0)
    assert np.allclose(d.responses, [-1.0, -3.5])
    with pytest.raises(ValueError):
        generate_e2e(f, u, -1.0)
    with pytest.raises(ValueError):
        generate_e2e(CoefficientVector([1.0]), u, 1.0)


def test_generate_ff_noise_is_unit():
    l = CoefficientVector([2.0, 0.0])
    u = np.ones((50_000, 2))
    d = generate_ff(l, u, seed=1)
    resid = d.responses - u * l.coeffs
    assert abs(resid.std() - 1.0) < 0.01
