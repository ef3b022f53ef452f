"""
Tests for the genus-1 trisecant identity, A₁₂ / B₁₂ and the canonical
bidifferential Ω.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from errors import NotOdd, NotSupported, OnDiagonal, PoleOnPath
from fay_check import (ODD_HALF, TrisecantConfig, a12_b12_check,
                       abel_difference_g1, biresidue, lattice_distance,
                       omega_g1, period_check, period_shortcut,
                       pullback_identity_residual, residual_batch,
                       trisecant_residual, trisecant_sides)
from siegel_core import from_fractions, random_period_matrix, scalar_tau

TAU_I = scalar_tau(1j)


def test_lattice_distance():
    assert lattice_distance(0.0j, 1j) == 0.0
    assert lattice_distance(2.0 + 3.0j, 1j) == pytest.approx(0.0, abs=1e-15)
    assert lattice_distance(0.5 + 0.5j, 1j) == pytest.approx(math.sqrt(0.5))


@pytest.mark.parametrize("t", [1j, 0.3 + 1.1j, complex(0.5, math.sqrt(3.0) / 2.0)])
def test_trisecant_identity(t):
    assert residual_batch(scalar_tau(t), seed=7, count=20)["max_residual"] < 1e-9


def test_single_configuration():
    cfg = TrisecantConfig(tau=TAU_I, w=0.1 + 0.05j, z1=0.3 + 0.2j, z2=-0.4 + 0.1j,
                          a1=0.2 - 0.3j, a2=-0.1 + 0.6j)
    assert trisecant_residual(cfg) < 1e-9
    lhs, rhs = trisecant_sides(cfg)
    assert abs(lhs) > 1e-6
    assert abs(lhs - rhs) < 1e-9 * (abs(lhs) + abs(rhs) + 1.0)
    assert abel_difference_g1(cfg.z1, cfg.a1) == cfg.z1 - cfg.a1


def test_trisecant_config_checks():
    with pytest.raises(NotSupported):
        TrisecantConfig(tau=random_period_matrix(np.random.default_rng(0), 2),
                        w=0j, z1=0j, z2=0j, a1=0j, a2=0j)
    with pytest.raises(NotOdd):
        TrisecantConfig(tau=TAU_I, w=0j, z1=0j, z2=0j, a1=0j, a2=0j,
                        zeta=from_fractions([0], [Fraction(1, 2)]))


@pytest.mark.parametrize("z2", [0.4 + 0.3j, -0.6 + 0.3j, 0.4 - 0.7j])
def test_omega_rejects_lattice_differences(z2):
    with pytest.raises(OnDiagonal):
        omega_g1(0.4 + 0.3j, z2, TAU_I)


def test_omega_is_symmetric_and_shift_invariant():
    z1, z2 = 0.4 + 0.3j, -0.2 + 0.1j
    omega = omega_g1(z1, z2, TAU_I)
    assert abs(omega_g1(z2, z1, TAU_I) - omega) < 1e-12 * abs(omega)
    shifted = omega_g1(z1, z2, TAU_I, zeta=ODD_HALF.shifted([1]))
    assert abs(shifted - omega) < 1e-12 * abs(omega)


def test_biresidue_is_one():
    assert abs(biresidue(0.13 + 0.29j, TAU_I) - 1.0) < 1e-4


def test_periods():
    a_per, b_per = period_check(TAU_I, n_quad=64)
    assert abs(a_per) < 1e-7
    assert abs(b_per - 2j * math.pi) < 1e-6
    a_sc, b_sc = period_shortcut(TAU_I)
    assert abs(a_sc - a_per) < 1e-9
    assert abs(b_sc - b_per) < 1e-9


def test_pole_on_path():
    p = 0.21 + 0.37j
    with pytest.raises(PoleOnPath):
        period_check(TAU_I, n_quad=64, p=p, base=p - 0.5)


def test_a12_b12_finite_differences():
    r = a12_b12_check(0.1 - 0.2j, 0.3 + 0.35j, -0.05 + 0.1j, TAU_I)
    assert r["resA"] < 1e-5
    assert r["resB"] < 1e-5
    assert r["agreement"] < 1e-5


def test_a12_b12_on_diagonal():
    with pytest.raises(OnDiagonal):
        a12_b12_check(0.1j, 0.3 + 0.2j, 0.3 + 0.2j, TAU_I)


def test_pullback_identity():
    for w, x, y in [(0.1 - 0.2j, 0.3 + 0.35j, -0.05 + 0.1j),
                    (0.25 + 0.1j, -0.4 + 0.6j, 0.2 - 0.3j)]:
        assert pullback_identity_residual(w, x, y, TAU_I) < 1e-9


def test_a12_b12_with_w_on_divisor():
    # θ((1+τ)/2) = 0, so s_w(0) = 0 and B₁₂ reduces to the ½·s_w''(0) term
    r = a12_b12_check(0.5 + 0.5j, 0.3 + 0.35j, -0.05 + 0.1j, TAU_I)
    assert abs(r["f0"]) < 1e-24
    assert r["resA"] < 1e-5
    assert r["resB"] < 1e-5
    assert r["agreement"] < 1e-5
