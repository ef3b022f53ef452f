"""
Tests for the theta series: values, jets, characteristics and truncation.
"""
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special

import theta_engine
from errors import EpsilonTooSmall, NotOdd, ValueOverflow
from siegel_core import (from_fractions, odd_characteristics,
                         random_period_matrix, scalar_tau)
from theta_engine import (c_odd, c_zeta, evaluate_batch, s_zeta_jet,
                          theta_char_jet, theta_jet, theta_value,
                          truncation_radius)

THETA_AT_I = 1.08643481121331
ODD = from_fractions([Fraction(1, 2)], [Fraction(1, 2)])


@pytest.fixture
def small_cap():
    theta_engine.configure(lattice_cap=8)
    yield
    theta_engine.configure(lattice_cap=theta_engine.DEFAULT_LATTICE_CAP)


def test_theta_at_i():
    value = theta_value([0.0], scalar_tau(1j))
    assert abs(value - THETA_AT_I) < 1e-13
    assert abs(value - math.pi ** 0.25 / scipy.special.gamma(0.75)) < 1e-13


def test_evenness_and_quasi_periodicity_genus_two():
    rng = np.random.default_rng(3)
    tau = random_period_matrix(rng, 2)
    z = np.array([0.2 - 0.1j, -0.3 + 0.25j])
    base = theta_value(z, tau)
    assert abs(theta_value(-z, tau) - base) < 1e-12 * abs(base)

    p, q = np.array([1, -2]), np.array([1, 0])
    shifted = theta_value(z + p + tau.entries @ q, tau)
    factor = np.exp(-1j * math.pi * (q @ tau.entries @ q) - 2j * math.pi * (q @ z))
    assert abs(shifted - factor * base) < 1e-10 * abs(factor * base)


def test_jet_matches_finite_differences():
    tau = scalar_tau(0.3 + 1.1j)
    z = np.array([0.17 + 0.08j])
    h = 1e-5
    jet = theta_jet(z, tau)
    grad_fd = (theta_value(z + h, tau) - theta_value(z - h, tau)) / (2 * h)
    hess_fd = (theta_jet(z + h, tau).gradient[0] - theta_jet(z - h, tau).gradient[0]) / (2 * h)
    assert abs(grad_fd - jet.gradient[0]) < 1e-6 * abs(jet.gradient[0])
    assert abs(hess_fd - jet.hessian[0, 0]) < 1e-6 * abs(jet.hessian[0, 0])


def test_batch_matches_single_points():
    rng = np.random.default_rng(8)
    tau = random_period_matrix(rng, 2)
    zs = rng.uniform(-0.5, 0.5, (5, 2)) + 1j * rng.uniform(-0.5, 0.5, (5, 2))
    values, *_ = evaluate_batch(tau, zs, 1e-13)
    for z, v in zip(zs, values):
        single = theta_value(z, tau)
        assert abs(v - single) < 1e-12 * abs(single)


def test_odd_characteristic_vanishes_at_origin():
    tau = scalar_tau(1j)
    jet = theta_char_jet(ODD, [0.0], tau)
    assert abs(jet.value) < 1e-12
    assert abs(jet.gradient[0]) > 0.1


def test_odd_square_is_constant_times_s_zeta():
    rng = np.random.default_rng(21)
    tau = random_period_matrix(rng, 2)
    for c in odd_characteristics(2):
        z = np.array([0.11 + 0.05j, -0.2 + 0.13j])
        value = theta_char_jet(c, z, tau, 1e-13).value
        s = s_zeta_jet(c, z, tau, 1e-13).value
        assert abs(value * value - c_odd(c, tau) * s) < 1e-11
        assert abs(c_zeta(c, tau) - c_odd(c, tau)) < 1e-13


def test_c_odd_requires_odd_characteristic():
    with pytest.raises(NotOdd):
        c_odd(from_fractions([0], [0]), scalar_tau(1j))


def test_truncation_bound_below_eps():
    plan = truncation_radius(scalar_tau(0.2 + 0.9j), [0.1 + 0.3j], 1e-13)
    assert plan.bound <= 1e-13
    assert plan.radius > 1.0


def test_tiny_imaginary_part_hits_cap(small_cap):
    with pytest.raises(EpsilonTooSmall) as exc:
        theta_value([0.0], scalar_tau(1e-4j))
    assert exc.value.exit_code == 1


@pytest.mark.parametrize("t", [1j, 0.3 + 1.1j])
def test_s_zeta_vanishes_at_half_period_sum(t):
    # ζ = (1 + τ)/2 is the odd half-period, so s_ζ(0) = θ(ζ)² = 0
    tau = scalar_tau(t)
    jet = s_zeta_jet(ODD, [0.0], tau)
    assert abs(jet.value) < 1e-11 * jet.scale


def test_envelope_beyond_double_range():
    with pytest.raises(ValueOverflow) as exc:
        theta_jet([20j], scalar_tau(1j))
    assert exc.value.exit_code == 1
