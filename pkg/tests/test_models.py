import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jumpentropy import lindblad as lb
from jumpentropy import models
from jumpentropy import operators as ops
from jumpentropy.exceptions import ModelValidationError, ValidationError

from conftest import null_space_state

seeds = st.integers(0, 2 ** 32 - 1)


def test_params_validation():
    with pytest.raises(ValidationError):
        models.QubitParams(rabi=-1.0)
    with pytest.raises(ValidationError):
        models.QubitParams(gamma_minus=float("nan"))
    with pytest.raises(ValidationError):
        models.LambdaParams(omega_over_t=0.0)
    assert models.QubitParams().gamma_plus == pytest.approx(0.0367879, abs=5e-8)


def test_qubit_model_structure():
    m = models.driven_qubit(models.QubitParams())
    gm = 0.1
    assert m.dim == 2 and len(m.channels) == 1
    assert m.h_eff[0, 0] == pytest.approx(-0.5j * gm, abs=1e-12)
    np.testing.assert_allclose(m.hp, -0.5 * np.array([[0, 1], [1, 0]]), atol=1e-15)
    np.testing.assert_allclose(m.h0, np.diag([0.5, -0.5]))
    # lowering operator is |g><e|
    np.testing.assert_allclose(m.channels[0].lower @ ops.basis_state(2, 0), ops.basis_state(2, 1))


def test_tampered_frequency_fails():
    with pytest.raises(ModelValidationError):
        models.driven_qubit(models.QubitParams(), channel_omega=2.0)
    with pytest.raises(ModelValidationError):
        models.lambda_system(models.LambdaParams(), channel_omega=1.5)


def test_lambda_model_structure():
    p = models.LambdaParams()
    m = models.lambda_system(p)
    gm, gp = p.gamma_minus, p.gamma_plus
    e0 = ops.basis_state(3, models.LAMBDA_E0)
    for ch in m.channels:
        assert np.linalg.norm(ch.lower @ e0) ** 2 == pytest.approx(0.5, abs=1e-15)
        assert ch.omega == 1.0
    total = sum(ch.gamma_minus * ch.raise_ @ ch.lower for ch in m.channels)
    np.testing.assert_allclose(total, np.diag([gm, 0, 0]), atol=1e-15)
    np.testing.assert_allclose(np.diag(m.h_eff), -0.5j * np.array([gm, gp / 2, gp / 2]), atol=1e-12)
    om = p.rabi
    expected = -0.5j * np.array(
        [
            [gm, om, -om],
            [-om, gp / 2, 0],
            [om, 0, gp / 2],
        ]
    )
    np.testing.assert_allclose(m.h_eff, expected, atol=1e-12)


def test_sigma_qubit_closed_form():
    assert models.stationary_sigma_qubit(models.QubitParams()) == pytest.approx(0.031313, abs=5e-7)
    assert models.stationary_sigma_qubit(models.QubitParams(omega_over_t=1e-8)) == pytest.approx(0.0, abs=1e-8)
    big = models.stationary_sigma_qubit(models.QubitParams(rabi=1e6))
    gm, gp = 0.1, 0.1 * math.exp(-1)
    assert big == pytest.approx((gm - gp) / 2, rel=1e-9)


def test_sigma_lambda_closed_form():
    assert models.stationary_sigma_lambda(models.LambdaParams()) == pytest.approx(0.072582, abs=5e-7)
    assert models.stationary_sigma_lambda(models.LambdaParams(rabi=0.0)) == 0.0
    vals = [models.stationary_sigma_lambda(models.LambdaParams(omega_over_t=w)) for w in (5, 10, 20)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-6
    assert models.stationary_sigma_lambda(models.LambdaParams(omega_over_t=math.inf)) == 0.0


@pytest.mark.parametrize(
    "p",
    [models.QubitParams(), models.QubitParams(2.0, 0.5, 0.3), models.QubitParams(0.5, 1.0, 2.0)],
)
def test_qubit_closed_form_matches_functional(p):
    m = models.driven_qubit(p)
    for rho in (lb.stationary_state(m), null_space_state(m)):
        assert lb.entropy_production_functional(m, rho) == pytest.approx(models.stationary_sigma_qubit(p), rel=1e-6)
    assert models.qubit_inversion(null_space_state(m)) == pytest.approx(models.stationary_inversion_qubit(p), abs=1e-10)


@pytest.mark.parametrize(
    "p",
    [models.LambdaParams(), models.LambdaParams(2.0, 1.0, 0.7), models.LambdaParams(0.6, 1.3, 2.5)],
)
def test_lambda_closed_form_matches_functional(p):
    m = models.lambda_system(p)
    rho = lb.stationary_state(m)
    sigma = lb.entropy_production_functional(m, rho)
    assert sigma == pytest.approx(models.stationary_sigma_lambda(p), rel=1e-6)
    rho23 = rho[models.LAMBDA_GP, models.LAMBDA_GM]
    assert abs(rho23.imag) <= 1e-9
    assert rho23.real == pytest.approx(models.stationary_coherence_lambda(p), rel=1e-7)
    assert sigma == pytest.approx(p.omega_over_t * p.gamma_plus * rho23.real, rel=1e-8)


def test_dark_state():
    psi = models.dark_state()
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-15)
    m = models.lambda_system(models.LambdaParams(omega_over_t=math.inf))
    assert np.max(np.abs(m.h_eff @ psi)) <= 1e-12
    assert abs(np.vdot(psi, m.hp @ psi)) <= 1e-15


def test_dark_state_attracts():
    m = models.lambda_system(models.LambdaParams(omega_over_t=20.0))
    rhos = lb.integrate_master(m, ops.projector(ops.basis_state(3, models.LAMBDA_GP)), [0.0, 20.0], dt=1e-2)
    psi = models.dark_state()
    assert np.vdot(psi, rhos[-1] @ psi).real >= 0.99


def test_mix_identity_and_swap():
    m = models.lambda_system(models.LambdaParams())
    same = models.mix_channels(m, 1.0, np.eye(2))
    for a, b in zip(m.channels, same.channels):
        np.testing.assert_allclose(a.lower, b.lower)
    swapped = models.mix_channels(m, 1.0, np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(swapped.channels[0].lower, m.channels[1].lower)
    np.testing.assert_allclose(swapped.channels[1].lower, m.channels[0].lower)


@given(seed=seeds)
def test_mixing_invariance(seed):
    r = np.random.default_rng(seed)
    m = models.lambda_system(models.LambdaParams())
    mixed = models.mix_channels(m, 1.0, ops.random_unitary(2, r))
    for _ in range(5):
        rho = ops.random_density_matrix(3, r)
        assert abs(lb.entropy_production_functional(mixed, rho) - lb.entropy_production_functional(m, rho)) <= 1e-10
        assert abs(lb.entropy_flux(mixed, rho) - lb.entropy_flux(m, rho)) <= 1e-10


def test_mix_errors():
    m = models.lambda_system(models.LambdaParams())
    with pytest.raises(ValidationError):
        models.mix_channels(m, 1.0, np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValidationError):
        models.mix_channels(m, 2.0, np.eye(2))
    with pytest.raises(ValidationError):
        models.mix_channels(m, 1.0, np.eye(3))
