"""
Tests for the σ / η correction matrices, V₀₀ and the Gunning identity.
"""
import math
from pathlib import Path

import numpy as np
import pytest

from bidiff import (BasisSection, PointSection, coincidence_residual,
                    correction_difference, eta_correction, gunning_table,
                    omega_zeta_coeffs, pullback_coefficients, s_w_jet0,
                    sigma_correction, sigma_correction_heat_g1,
                    sigma_correction_via_generator, sigma_generator,
                    v00_analysis, v00_basis, v00_matrix)
from errors import InputError, NotOnThetaDivisor
from siegel_core import (characteristic_from_point, from_fractions,
                         load_period_matrix, odd_characteristics,
                         random_period_matrix, scalar_tau)
from theta_engine import c_zeta, s_zeta_jet, theta_char_jet, theta_value

DATA = Path(__file__).parent / "data"


def test_eta_at_i():
    assert eta_correction(scalar_tau(1j)).entries[0, 0] == pytest.approx(-math.pi)


def test_eta_negative_definite():
    tau = random_period_matrix(np.random.default_rng(4), 3)
    eig = np.linalg.eigvalsh(eta_correction(tau).entries.real)
    assert eig.max() < 0.0


@pytest.mark.parametrize("t", [1j, complex(0.5, math.sqrt(3.0) / 2.0)])
def test_coincidence_at_special_points(t):
    assert coincidence_residual(scalar_tau(t)) < 1e-8


def test_non_coincidence_at_generic_point():
    diff = correction_difference(scalar_tau(0.3 + 1.1j))
    assert diff.max_norm() > 1e-3
    assert diff.frobenius() >= diff.max_norm()


def test_sigma_routes_agree():
    tau = random_period_matrix(np.random.default_rng(17), 2)
    direct = sigma_correction(tau).entries
    via = sigma_correction_via_generator(tau).entries
    assert np.max(np.abs(direct - via)) < 1e-12 * np.max(np.abs(direct))


def test_sigma_generator_value_at_origin():
    # s(0) = Σ_u conj(θ_u(0))·θ_u(0) = Σ_u |θ_u(0)|²
    tau = random_period_matrix(np.random.default_rng(17), 2)
    gen = sigma_generator(tau)
    pc = pullback_coefficients(BasisSection(gen), tau)
    assert abs(pc.omega_coeff - np.sum(np.abs(gen) ** 2)) < 1e-13 * abs(pc.omega_coeff)


def test_sigma_heat_route_genus_one():
    tau = scalar_tau(0.3 + 1.1j)
    direct = sigma_correction(tau).entries[0, 0]
    heat = sigma_correction_heat_g1(tau, 1e-13).entries[0, 0]
    assert abs(direct - heat) < 1e-9 * abs(direct)


def test_sigma_threads_do_not_change_result():
    tau = random_period_matrix(np.random.default_rng(23), 2)
    assert np.array_equal(sigma_correction(tau, threads=1).entries,
                          sigma_correction(tau, threads=4).entries)


@pytest.mark.parametrize("g,expected", [(1, 0), (2, 0), (3, 1)])
def test_v00_dimension(g, expected):
    tau = random_period_matrix(np.random.default_rng(40 + g), g)
    result = v00_analysis(tau)
    assert result["dim"] == expected
    assert result["expected"] == expected
    assert v00_matrix(tau).shape == (2 ** g, 1 + g * (g + 1) // 2)


def test_v00_basis_is_annihilated():
    tau = random_period_matrix(np.random.default_rng(43), 3)
    basis = v00_basis(tau)
    assert basis.shape == (8, 1)
    pc = pullback_coefficients(BasisSection(basis[:, 0]), tau)
    assert abs(pc.omega_coeff) < 1e-8
    assert np.max(np.abs(pc.holo_matrix)) < 1e-8


def test_gunning_table_genus_two():
    rows = gunning_table(random_period_matrix(np.random.default_rng(2), 2))
    assert len(rows) == 6
    assert all(r["parity"] == "odd" for r in rows)
    assert max(r["residual"] for r in rows) < 1e-9


def test_omega_zeta_needs_point_on_divisor():
    with pytest.raises(NotOnThetaDivisor):
        omega_zeta_coeffs(from_fractions([0], [0]), scalar_tau(1j))


def test_point_section_coefficients():
    tau = scalar_tau(0.1 + 0.9j)
    w = np.array([0.2 + 0.1j])
    pc = pullback_coefficients(PointSection(w), tau)
    assert abs(pc.omega_coeff - theta_value(w, tau) ** 2) < 1e-10


def test_s_w_second_derivative():
    # f(z) = θ(w+z)θ(w−z) is even in z
    tau = scalar_tau(1j)
    w, h = np.array([0.2 + 0.1j]), 1e-4
    f0, fij = s_w_jet0(w, tau, 1e-13)
    fh = theta_value(w + h, tau) * theta_value(w - h, tau)
    fd = 2.0 * (fh - f0) / h ** 2
    assert abs(fd - fij[0, 0]) < 1e-4 * max(1.0, abs(fij[0, 0]))


def test_pullback_is_linear():
    rng = np.random.default_rng(31)
    tau = random_period_matrix(rng, 2)
    f = rng.normal(size=4) + 1j * rng.normal(size=4)
    h = rng.normal(size=4) + 1j * rng.normal(size=4)
    alpha, beta = 0.7 - 1.3j, -0.4 + 0.2j
    pf = pullback_coefficients(BasisSection(f), tau)
    ph = pullback_coefficients(BasisSection(h), tau)
    pc = pullback_coefficients(BasisSection(alpha * f + beta * h), tau)
    omega = alpha * pf.omega_coeff + beta * ph.omega_coeff
    holo = alpha * pf.holo_matrix + beta * ph.holo_matrix
    assert abs(pc.omega_coeff - omega) < 1e-12 * abs(omega)
    assert np.max(np.abs(pc.holo_matrix - holo)) < 1e-12 * np.max(np.abs(holo))


def test_point_section_at_odd_characteristic():
    tau = load_period_matrix(DATA / "tau_g2.json")
    for c in odd_characteristics(2):
        pc = pullback_coefficients(PointSection(c.point(tau)), tau)
        grad = theta_char_jet(c, np.zeros(2), tau).gradient
        expected = np.outer(grad, grad) / c_zeta(c, tau)
        assert abs(pc.omega_coeff) < 1e-20
        assert np.max(np.abs(pc.holo_matrix - expected)) < 1e-9 * np.max(np.abs(expected))


def test_s_w_matches_s_zeta_at_origin():
    rng = np.random.default_rng(37)
    tau = random_period_matrix(rng, 2)
    w = rng.uniform(-0.5, 0.5, 2) + 1j * rng.uniform(-0.5, 0.5, 2)
    f0, fij = s_w_jet0(w, tau, 1e-13)
    jet = s_zeta_jet(characteristic_from_point(w, tau), np.zeros(2), tau, 1e-13)
    assert abs(f0 - jet.value) < 1e-11 * abs(f0)
    assert np.max(np.abs(fij - jet.hessian)) < 1e-11 * np.max(np.abs(fij))


def test_basis_section_length_checked():
    with pytest.raises(InputError):
        pullback_coefficients(BasisSection(np.ones(3)), scalar_tau(1j))
