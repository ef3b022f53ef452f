"""
Tests for period matrix validation and theta characteristics.
"""
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from errors import (InputError, NotHalfInteger, NotPositiveDefinite,
                    NotSymmetric)
from siegel_core import (characteristic_arg, characteristic_from_json,
                         characteristic_from_point, from_fractions,
                         half_integer_characteristics, join_negative_values,
                         load_period_matrix, odd_characteristics, parity,
                         parse_characteristic, parse_complex_vector,
                         period_matrix_from_json, random_period_matrix,
                         scalar_tau, second_order_indices,
                         validate_period_matrix)

DATA = Path(__file__).parent / "data"


def test_scalar_tau_at_i():
    tau = scalar_tau(1j)
    assert tau.g == 1
    assert tau.lambda_min == pytest.approx(1.0)
    assert tau.im_inverse.matrix[0, 0] == pytest.approx(1.0)


def test_asymmetric_matrix_rejected():
    with pytest.raises(NotSymmetric):
        validate_period_matrix([[1j, 0.1], [0.2, 1j]])


@pytest.mark.parametrize("im", [[[1.0, 0.0], [0.0, -1.0]], [[1.0, 1.0], [1.0, 1.0]]])
def test_imaginary_part_must_be_positive_definite(im):
    with pytest.raises(NotPositiveDefinite) as exc:
        validate_period_matrix(1j * np.array(im))
    assert exc.value.exit_code == 2
    assert isinstance(exc.value, ValueError)


def test_load_genus_two_file():
    tau = load_period_matrix(DATA / "tau_g2.json")
    assert tau.g == 2
    assert tau.entries[0, 1] == pytest.approx(0.5)
    assert tau.lambda_min == pytest.approx(1.0)
    assert np.allclose(tau.im_inverse.matrix, np.diag([1.0, 0.5]))


def test_json_shape_mismatch():
    with pytest.raises(InputError):
        period_matrix_from_json({"g": 2, "re": [[0.0]], "im": [[1.0]]})


def test_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputError):
        load_period_matrix(tmp_path / "absent.json")


def test_random_period_matrix_is_valid():
    rng = np.random.default_rng(5)
    for g in (1, 2, 3):
        tau = random_period_matrix(rng, g)
        assert np.array_equal(tau.entries, tau.entries.T)
        assert tau.lambda_min >= 0.8 - 1e-12


def test_characteristic_from_point_reconstructs():
    rng = np.random.default_rng(11)
    tau = random_period_matrix(rng, 3)
    zeta = rng.normal(size=3) + 1j * rng.normal(size=3)
    c = characteristic_from_point(zeta, tau)
    assert np.allclose(c.point(tau), zeta, rtol=0, atol=1e-12)
    with pytest.raises(NotHalfInteger):
        parity(c)


def test_parity_counts():
    assert len(half_integer_characteristics(2)) == 16
    assert len(odd_characteristics(1)) == 1
    assert len(odd_characteristics(2)) == 6
    assert len(odd_characteristics(3)) == 28


def test_parity_of_named_characteristics():
    assert parity(from_fractions([Fraction(1, 2)], [Fraction(1, 2)])) == "odd"
    assert parity(from_fractions([0], [Fraction(1, 2)])) == "even"
    assert parse_characteristic("1/2 0,1/2 1/2").parity == "odd"
    with pytest.raises(NotHalfInteger):
        parity(from_fractions([Fraction(1, 3)], [0]))


def test_integer_shift_keeps_parity():
    c = from_fractions([Fraction(1, 2)], [Fraction(1, 2)])
    shifted = c.shifted([1], [-1])
    assert shifted.a_exact == (Fraction(3, 2),)
    assert shifted.b_exact == (Fraction(-1, 2),)
    assert shifted.parity == "odd"


def test_characteristic_json():
    c = characteristic_from_json({"a_num": [1], "a_den": 2, "b_num": [1], "b_den": 2})
    assert c.label() == ("1/2", "1/2")
    with pytest.raises(InputError):
        characteristic_from_json({"a_num": [1], "a_den": 0, "b_num": [1], "b_den": 2})


def test_characteristic_arg_accepts_file_or_text():
    from_file = characteristic_arg(str(DATA / "char_odd_g1.json"))
    assert from_file.label() == ("1/2", "1/2")
    assert from_file.parity == "odd"
    assert characteristic_arg("1/2,0").parity == "even"
    with pytest.raises(InputError):
        characteristic_arg(str(DATA / "absent.json"))


def test_join_negative_values():
    argv = ["locus", "scan", "--window", "-0.5,0.5,0.8,1.2", "--grid", "3,3",
            "--seed", "-.1,1", "--eps=1e-12", "--resume", "--out", "scan.csv"]
    assert join_negative_values(argv) == [
        "locus", "scan", "--window=-0.5,0.5,0.8,1.2", "--grid", "3,3",
        "--seed=-.1,1", "--eps=1e-12", "--resume", "--out", "scan.csv"]
    assert join_negative_values(["-v", "--z", "0,-1"]) == ["-v", "--z", "0,-1"]


def test_second_order_indices_lexicographic():
    assert second_order_indices(2) == [(0, 0), (0, Fraction(1, 2)),
                                       (Fraction(1, 2), 0), (Fraction(1, 2), Fraction(1, 2))]


def test_parse_complex_vector():
    z = parse_complex_vector("0.1,0.2;0.3,-0.4")
    assert np.array_equal(z, np.array([0.1 + 0.2j, 0.3 - 0.4j]))
    with pytest.raises(InputError):
        parse_complex_vector("0.1;0.2")
