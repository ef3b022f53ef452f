#!/usr/bin/env python3
"""
siegel_core.py
Validated substrate for every other module: period matrices in the Siegel
upper half-space, theta characteristics ζ = τa + b, and (Im τ)⁻¹.

Conventions used everywhere downstream:
  - ω_1..ω_g are the normalized holomorphic differentials (∫_{a_i} ω_j = δ_ij).
    They are never represented as functions, only by their index i; a
    bidifferential's holomorphic part is a g×g coefficient matrix in the
    basis p₁*ω_i ∧ p₂*ω_j.
  - τ_ij = ∫_{b_i} ω_j is stored as given; no reduction modulo Sp(2g, ℤ).

Input formats:
  period matrix   {"g": n, "re": [[...]], "im": [[...]]}
  characteristic  {"a_num": [...], "a_den": d, "b_num": [...], "b_den": d}
"""
import argparse
import itertools
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg

from errors import (InputError, NotHalfInteger, NotPositiveDefinite,
                    NotSymmetric)

SYMMETRY_RTOL = 1e-12
IM_INVERSE_RTOL = 1e-13


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Period matrices
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ImInverse:
    """(Im τ)⁻¹ as a real symmetric matrix."""
    matrix: np.ndarray

    @classmethod
    def of(cls, im: np.ndarray) -> "ImInverse":
        inv = scipy.linalg.inv(im)
        inv = 0.5 * (inv + inv.T)
        err = np.max(np.abs(inv @ im - np.eye(im.shape[0])))
        if err > IM_INVERSE_RTOL * max(1.0, np.linalg.cond(im)):
            raise NotPositiveDefinite(f"Im τ is too ill-conditioned to invert (residual {err:.3g})")
        return cls(_frozen(inv))


@dataclass(frozen=True)
class PeriodMatrix:
    """A point τ of ℍ_g. Build through validate_period_matrix()."""
    g: int
    entries: np.ndarray
    im_inverse: ImInverse = field(repr=False)
    lambda_min: float = field(repr=False)

    @property
    def re(self) -> np.ndarray:
        return self.entries.real

    @property
    def im(self) -> np.ndarray:
        return self.entries.imag

    def to_json(self) -> dict:
        return {"g": self.g, "re": self.re.tolist(), "im": self.im.tolist()}

    def __eq__(self, other) -> bool:
        return isinstance(other, PeriodMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


def validate_period_matrix(entries) -> PeriodMatrix:
    tau = np.atleast_2d(np.asarray(entries, dtype=complex))
    if tau.ndim != 2 or tau.shape[0] != tau.shape[1] or tau.shape[0] == 0:
        raise InputError(f"period matrix must be square, got shape {tau.shape}")

    scale = max(float(np.max(np.abs(tau))), np.finfo(float).tiny)
    asym = float(np.max(np.abs(tau - tau.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"|τ - τᵗ| = {asym:.3g} exceeds {SYMMETRY_RTOL:g} relative")
    tau = 0.5 * (tau + tau.T)

    im = tau.imag
    try:
        scipy.linalg.cholesky(im, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Im τ is not positive definite (Cholesky factorization failed)")
    lam = float(scipy.linalg.eigvalsh(im)[0])
    if lam <= 0.0:
        raise NotPositiveDefinite(f"Im τ has smallest eigenvalue {lam:.3g}")

    return PeriodMatrix(g=tau.shape[0], entries=_frozen(tau),
                        im_inverse=ImInverse.of(im), lambda_min=lam)


def period_matrix_from_json(payload: dict) -> PeriodMatrix:
    try:
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload["im"], dtype=float)
        g = int(payload.get("g", re.shape[0]))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed period matrix JSON: {e}")
    if re.shape != (g, g) or im.shape != (g, g):
        raise InputError(f"period matrix JSON declares g={g} but re/im have shapes "
                         f"{re.shape}/{im.shape}")
    return validate_period_matrix(re + 1j * im)


def load_period_matrix(path: Path) -> PeriodMatrix:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read period matrix {path}: {e}")
    return period_matrix_from_json(payload)


def scalar_tau(tau: complex) -> PeriodMatrix:
    return validate_period_matrix([[tau]])


def random_period_matrix(rng: np.random.Generator, g: int,
                         re_range: float = 0.5, im_floor: float = 0.8) -> PeriodMatrix:
    """Random τ with Re in [-re_range, re_range] and Im = im_floor·I + small SPD."""
    re = rng.uniform(-re_range, re_range, (g, g))
    a = rng.uniform(-0.3, 0.3, (g, g))
    im = im_floor * np.eye(g) + a @ a.T
    return validate_period_matrix(0.5 * (re + re.T) + 1j * im)


# ---------------------------------------------------------------------------
# Characteristics
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Characteristic:
    """ζ = τa + b. `a_exact`/`b_exact` are set only from rational inputs."""
    a: np.ndarray
    b: np.ndarray
    a_exact: tuple | None = None
    b_exact: tuple | None = None

    @property
    def g(self) -> int:
        return len(self.a)

    @property
    def half_integer(self) -> bool:
        if self.a_exact is None or self.b_exact is None:
            return False
        return all((2 * q).denominator == 1 for q in self.a_exact + self.b_exact)

    @property
    def parity(self) -> str:
        if not self.half_integer:
            return "none"
        four_ab = 4 * sum(x * y for x, y in zip(self.a_exact, self.b_exact))
        return "odd" if int(four_ab) % 2 else "even"

    def point(self, tau: PeriodMatrix) -> np.ndarray:
        return tau.entries @ self.a + self.b

    def shifted(self, da, db=None) -> "Characteristic":
        """Same ζ-class with a → a + da, b → b + db (integer shifts)."""
        da = tuple(Fraction(x) for x in da)
        db = tuple(Fraction(x) for x in (db if db is not None else [0] * self.g))
        if self.a_exact is None:
            return Characteristic(_frozen(self.a + np.array(da, float)),
                                  _frozen(self.b + np.array(db, float)))
        return from_fractions([x + y for x, y in zip(self.a_exact, da)],
                              [x + y for x, y in zip(self.b_exact, db)])

    def label(self) -> tuple[str, str]:
        if self.a_exact is None:
            return (" ".join(repr(float(x)) for x in self.a),
                    " ".join(repr(float(x)) for x in self.b))
        return (" ".join(str(q) for q in self.a_exact),
                " ".join(str(q) for q in self.b_exact))


def from_fractions(a, b) -> Characteristic:
    a_q = tuple(Fraction(x) for x in a)
    b_q = tuple(Fraction(x) for x in b)
    if len(a_q) != len(b_q):
        raise InputError(f"characteristic a and b lengths differ ({len(a_q)} vs {len(b_q)})")
    return Characteristic(a=_frozen(np.array([float(q) for q in a_q])),
                          b=_frozen(np.array([float(q) for q in b_q])),
                          a_exact=a_q, b_exact=b_q)


def characteristic_from_json(payload: dict) -> Characteristic:
    try:
        a_den = int(payload["a_den"])
        b_den = int(payload["b_den"])
        a = [Fraction(int(n), a_den) for n in payload["a_num"]]
        b = [Fraction(int(n), b_den) for n in payload["b_num"]]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"malformed characteristic JSON: {e}")
    return from_fractions(a, b)


def parse_characteristic(text: str) -> Characteristic:
    """Parse "a1 a2 ...,b1 b2 ..." with rational entries, e.g. "1/2,1/2" or "1/2 0,1/2 1/2"."""
    try:
        a_txt, b_txt = text.split(",")
        return from_fractions([Fraction(t) for t in a_txt.split()],
                              [Fraction(t) for t in b_txt.split()])
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"cannot parse characteristic {text!r}: {e}")


def load_characteristic(path: Path) -> Characteristic:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read characteristic {path}: {e}")
    return characteristic_from_json(payload)


def characteristic_arg(text: str) -> Characteristic:
    """--char value: a JSON file path (a_num/a_den/b_num/b_den) or inline "a..,b.."."""
    if text.endswith(".json"):
        return load_characteristic(Path(text))
    return parse_characteristic(text)


def characteristic_from_point(zeta, tau: PeriodMatrix) -> Characteristic:
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    a = tau.im_inverse.matrix @ zeta.imag
    b = zeta.real - tau.re @ a
    return Characteristic(a=_frozen(a), b=_frozen(b))


def parity(c: Characteristic) -> str:
    if not c.half_integer:
        raise NotHalfInteger(f"characteristic a={c.label()[0]!r}, b={c.label()[1]!r} "
                             "is not half-integer (or was not built from exact rationals)")
    return c.parity


def half_integer_characteristics(g: int) -> list[Characteristic]:
    """All (a, b) ∈ {0, 1/2}^g × {0, 1/2}^g in lexicographic order."""
    half = (Fraction(0), Fraction(1, 2))
    return [from_fractions(a, b)
            for a in itertools.product(half, repeat=g)
            for b in itertools.product(half, repeat=g)]


def odd_characteristics(g: int) -> list[Characteristic]:
    return [c for c in half_integer_characteristics(g) if c.parity == "odd"]


def second_order_indices(g: int) -> list[tuple]:
    """Representatives u ∈ {0, 1/2}^g of (2⁻¹ℤ/ℤ)^g, lexicographic."""
    return list(itertools.product((Fraction(0), Fraction(1, 2)), repeat=g))


# ---------------------------------------------------------------------------
# CLI argument parsing helpers
# ---------------------------------------------------------------------------
def parse_complex_vector(text: str) -> np.ndarray:
    """Parse "re,im;re,im;..." into a complex vector."""
    try:
        parts = [p for p in text.split(";") if p.strip()]
        out = []
        for p in parts:
            re, im = p.split(",")
            out.append(complex(float(re), float(im)))
    except ValueError as e:
        raise InputError(f"cannot parse complex vector {text!r} (expected 're,im;re,im'): {e}")
    return np.array(out, dtype=complex)


def parse_complex(text: str) -> complex:
    vec = parse_complex_vector(text)
    if len(vec) != 1:
        raise InputError(f"expected one complex number 're,im', got {text!r}")
    return complex(vec[0])


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite "--opt -0.5,1" as "--opt=-0.5,1".

    argparse only recognises plain negative numbers, so a comma list that
    starts with "-" would otherwise be read as an unknown flag.
    """
    out = []
    for token in argv:
        prev = out[-1] if out else ""
        if _NEGATIVE_VALUE.match(token) and prev.startswith("--") and "=" not in prev:
            out[-1] = f"{prev}={token}"
        else:
            out.append(token)
    return out


def main():
    parser = argparse.ArgumentParser(description="Validate a period matrix and characteristic")
    parser.add_argument("--tau", required=True, help="Period matrix JSON file")
    parser.add_argument("--char", default=None, help='Characteristic "a1 ..,b1 .." (rationals) or JSON file')
    args = parser.parse_args(join_negative_values(sys.argv[1:]))

    try:
        tau = load_period_matrix(Path(args.tau))
    except InputError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        sys.exit(2)

    print(f"[siegel_core] g = {tau.g}")
    print(f"[siegel_core] λ_min(Im τ) = {tau.lambda_min!r}")
    print(f"[siegel_core] (Im τ)⁻¹ = {tau.im_inverse.matrix.tolist()}")
    if args.char:
        c = characteristic_arg(args.char)
        print(f"[siegel_core] characteristic a={c.label()[0]} b={c.label()[1]} "
              f"half-integer={c.half_integer} parity={c.parity}")


if __name__ == "__main__":
    main()
