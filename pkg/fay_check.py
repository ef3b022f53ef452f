#!/usr/bin/env python3
"""
fay_check.py
Genus-1 numerical checks of the trisecant identity, the second mixed
derivatives A₁₂ / B₁₂ of its two sides, and the canonical bidifferential

    Ω(z1, z2) = −(log θ[ζ])''(z1 − z2) dz1 dz2

with its period conditions. At genus 1 the Abel difference is plain
subtraction on the universal cover ℂ; points are never reduced mod ℤ + τℤ.

Usage:
  python3 fay_check.py residual --tau data/tau_i.json --seed 7 --count 100
  python3 fay_check.py periods  --tau data/tau_i.json --p 0.21,0.37
  python3 fay_check.py a12b12   --tau data/tau_i.json --seed 7
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from tqdm import tqdm

from errors import (InputError, NotOdd, NotSupported, OnDiagonal, PoleOnPath,
                    ThetaBidiffError)
from results import emit_json, emit_table
from run_config import ordered_map
from siegel_core import (Characteristic, PeriodMatrix, from_fractions,
                         join_negative_values, load_period_matrix,
                         parse_complex)
from theta_engine import (DEFAULT_EPS_VALUE, lattice_cap, theta_char_jet,
                          theta_char_values, theta_values)

log = logging.getLogger("thetabidiff.fay_check")

DIAGONAL_TOL = 1e-6
POLE_TOL = 1e-3
DEFAULT_FD_STEP = 1e-4
ODD_HALF = from_fractions([Fraction(1, 2)], [Fraction(1, 2)])


def _require_g1(tau: PeriodMatrix, what: str):
    if tau.g != 1:
        raise NotSupported(f"{what} needs points on an embedded curve for g ≥ 2; only g = 1 is supported")


@dataclass(frozen=True)
class TrisecantConfig:
    tau: PeriodMatrix
    w: complex
    z1: complex
    z2: complex
    a1: complex
    a2: complex
    zeta: Characteristic = field(default=ODD_HALF)

    def __post_init__(self):
        _require_g1(self.tau, "the trisecant identity")
        if self.zeta.parity != "odd":
            raise NotOdd(f"trisecant needs an odd characteristic, got parity {self.zeta.parity!r}")


def abel_difference_g1(x: complex, y: complex) -> complex:
    return x - y


def lattice_distance(u: complex, tau: complex) -> float:
    """Distance from u to the nearest point of ℤ + τℤ."""
    k0 = round(u.imag / tau.imag)
    best = math.inf
    for k in (k0 - 1, k0, k0 + 1):
        v = u - k * tau
        for j in (math.floor(v.real), math.floor(v.real) + 1):
            best = min(best, abs(v - j))
    return best


# ---------------------------------------------------------------------------
# Trisecant sides
# ---------------------------------------------------------------------------
def trisecant_batch(tau: PeriodMatrix, zeta: Characteristic, w: complex, z1, z2, a1: complex,
                    a2: complex, eps: float = DEFAULT_EPS_VALUE) -> tuple[np.ndarray, np.ndarray]:
    """Sides (A, B) for arrays of (z1, z2) at fixed w, a1, a2, from one shared lattice per series."""
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    k = len(z1)
    d = abel_difference_g1
    ones = np.ones(k, dtype=complex)
    # θ arguments: α(z1,z2), α(a2,a1), θ(w), γ, α(z1,a1), α(a2,z2)
    theta_args = np.concatenate([w + d(z1, z2), (w + d(a2, a1)) * ones, w * ones,
                                 w + d(z1, z2) - d(a1, a2), w + d(z1, a1), w + d(a2, z2)])
    # θ[ζ] arguments: β(z1,a1), β(z2,a2), β(z1,a2), β(z2,a1), β(z1,z2), β(a1,a2)
    beta_args = np.concatenate([d(z1, a1), d(z2, a2), d(z1, a2), d(z2, a1), d(z1, z2), d(a1, a2) * ones])
    th, _, _ = theta_values(theta_args[:, None], tau, eps)
    be, _, _ = theta_char_values(zeta, beta_args[:, None], tau, eps)
    al12, al21, th_w, gam, al_z1a1, al_a2z2 = th.reshape(6, k)
    b11, b22, b12, b21, bz, ba = be.reshape(6, k)
    A = al12 * al21 * b11 * b22
    B = th_w * gam * b12 * b21 + al_z1a1 * al_a2z2 * bz * ba
    return A, B


def trisecant_sides(cfg: TrisecantConfig, eps: float = DEFAULT_EPS_VALUE) -> tuple[complex, complex]:
    A, B = trisecant_batch(cfg.tau, cfg.zeta, cfg.w, [cfg.z1], [cfg.z2], cfg.a1, cfg.a2, eps)
    return complex(A[0]), complex(B[0])


def trisecant_residual(cfg: TrisecantConfig, eps: float = DEFAULT_EPS_VALUE) -> float:
    A, B = trisecant_sides(cfg, eps)
    return abs(A - B) / (abs(A) + abs(B) + 1.0)


def random_point(rng: np.random.Generator, tau: complex, half_width: float = 1.0) -> complex:
    s, t = rng.uniform(-half_width, half_width, 2)
    return complex(s + t * tau)


def random_config(rng: np.random.Generator, tau: PeriodMatrix) -> TrisecantConfig:
    t = complex(tau.entries[0, 0])
    w = random_point(rng, t, 0.5)
    z1, z2, a1, a2 = (random_point(rng, t) for _ in range(4))
    return TrisecantConfig(tau=tau, w=w, z1=z1, z2=z2, a1=a1, a2=a2)


def residual_batch(tau: PeriodMatrix, seed: int, count: int = 100, eps: float = DEFAULT_EPS_VALUE,
                   threads: int = 1) -> dict:
    _require_g1(tau, "the trisecant identity")
    rng = np.random.default_rng(seed)
    configs = [random_config(rng, tau) for _ in range(count)]
    residuals = ordered_map(lambda c: trisecant_residual(c, eps), configs, threads)
    return {"max_residual": float(max(residuals)), "mean_residual": float(np.mean(residuals)),
            "count": count}


# ---------------------------------------------------------------------------
# Canonical bidifferential
# ---------------------------------------------------------------------------
def omega_g1(z1: complex, z2: complex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE,
             zeta: Characteristic = ODD_HALF) -> complex:
    """Coefficient of dz1 dz2 in Ω: −(θ[ζ]''θ[ζ] − θ[ζ]'²)/θ[ζ]² at z1 − z2."""
    _require_g1(tau, "Ω")
    u = complex(abel_difference_g1(z1, z2))
    dist = lattice_distance(u, complex(tau.entries[0, 0]))
    if dist <= DIAGONAL_TOL:
        raise OnDiagonal(f"z1 − z2 = {u!r} is within {dist:.3g} of the lattice")
    jet = theta_char_jet(zeta, [u], tau, eps)
    th, d1, d2 = jet.value, jet.gradient[0], jet.hessian[0, 0]
    return complex(-(d2 * th - d1 * d1) / (th * th))


def biresidue(z: complex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE,
              offsets: tuple = (1e-2, 1e-3)) -> complex:
    """Richardson extrapolation of (z1 − z2)²·Ω(z1, z2) as z1 → z2; should be 1."""
    h1, h2 = offsets
    f1 = h1 * h1 * omega_g1(z + h1, z, tau, eps)
    f2 = h2 * h2 * omega_g1(z + h2, z, tau, eps)
    return complex((f2 * h1 * h1 - f1 * h2 * h2) / (h1 * h1 - h2 * h2))


def log_derivative(u: complex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE,
                   zeta: Characteristic = ODD_HALF) -> complex:
    jet = theta_char_jet(zeta, [u], tau, eps)
    return complex(jet.gradient[0] / jet.value)


def default_base(p: complex, tau: complex) -> complex:
    return p - 0.5 * (1.0 + tau)


def _check_path(p: complex, base: complex, step: complex, tau: complex, samples: int):
    for s in np.linspace(0.0, 1.0, samples + 1):
        q = base + s * step
        dist = lattice_distance(p - q, tau)
        if dist < POLE_TOL:
            raise PoleOnPath(f"path from {base!r} along {step!r} passes within {dist:.3g} of a pole")


def period_check(tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE, n_quad: int = 64,
                 p: complex = 0.21 + 0.37j, base: complex | None = None) -> tuple[complex, complex]:
    """∫ Ω(p, q) dq over q ∈ [t, t+1] and q ∈ [t, t+τ] with the periodic trapezoid rule."""
    _require_g1(tau, "period_check")
    t_tau = complex(tau.entries[0, 0])
    base = default_base(p, t_tau) if base is None else complex(base)
    nodes = np.arange(n_quad) / n_quad
    periods = []
    for step in (1.0 + 0j, t_tau):
        _check_path(p, base, step, t_tau, 8 * n_quad)
        u = p - (base + nodes * step)
        values, grads, hess = theta_char_values(ODD_HALF, u[:, None], tau, eps, order=2)
        d1, d2 = grads[:, 0], hess[:, 0, 0]
        omega = -(d2 * values - d1 * d1) / (values * values)
        periods.append(complex(np.sum(omega) * step / n_quad))
    return periods[0], periods[1]


def period_shortcut(tau: PeriodMatrix, p: complex = 0.21 + 0.37j, base: complex | None = None,
                    eps: float = DEFAULT_EPS_VALUE) -> tuple[complex, complex]:
    """Periods from the antiderivative L'(p − q) with L = log θ[ζ]."""
    t_tau = complex(tau.entries[0, 0])
    base = default_base(p, t_tau) if base is None else complex(base)
    start = log_derivative(p - base, tau, eps)
    a = log_derivative(p - base - 1.0, tau, eps) - start
    b = log_derivative(p - base - t_tau, tau, eps) - start
    return a, b


# ---------------------------------------------------------------------------
# A₁₂ / B₁₂
# ---------------------------------------------------------------------------
def s_w_scalar_jet(w: complex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> tuple[complex, complex]:
    from bidiff import s_w_jet0

    f0, fij = s_w_jet0([w], tau, eps)
    return complex(f0), complex(fij[0, 0])


def a12_b12_check(w: complex, a1: complex, a2: complex, tau: PeriodMatrix,
                  eps: float = DEFAULT_EPS_VALUE, h: float = DEFAULT_FD_STEP) -> dict:
    """Mixed FD derivatives of both trisecant sides at (z1, z2) = (a1, a2) vs closed forms."""
    _require_g1(tau, "A12/B12")
    u = a1 - a2
    if lattice_distance(u, complex(tau.entries[0, 0])) <= DIAGONAL_TOL:
        raise OnDiagonal(f"a1 − a2 = {u!r} lies on the lattice")
    z1 = np.array([a1 + h, a1 + h, a1 - h, a1 - h])
    z2 = np.array([a2 + h, a2 - h, a2 + h, a2 - h])
    A, B = trisecant_batch(tau, ODD_HALF, w, z1, z2, a1, a2, eps)
    sign = np.array([1.0, -1.0, -1.0, 1.0])
    a12_fd = complex(np.sum(sign * A) / (4.0 * h * h))
    b12_fd = complex(np.sum(sign * B) / (4.0 * h * h))

    f0, f2 = s_w_scalar_jet(w, tau, eps)
    th, _, _ = theta_values(np.array([[u - w], [u + w]]), tau, eps)
    s_w_u = complex(th[0] * th[1])
    odd = theta_char_jet(ODD_HALF, [u], tau, eps).value
    slope = theta_char_jet(ODD_HALF, [0.0], tau, eps).gradient[0]
    a12 = s_w_u * slope * slope
    b12 = odd * odd * (f0 * omega_g1(a1, a2, tau, eps) + 0.5 * f2)
    return {
        "A12": a12, "B12": b12, "A12_fd": a12_fd, "B12_fd": b12_fd, "f0": f0,
        "resA": abs(a12_fd - a12) / abs(a12),
        "resB": abs(b12_fd - b12) / abs(b12),
        "agreement": abs(a12_fd - b12_fd) / abs(a12_fd),
    }


def pullback_identity_residual(w: complex, x: complex, y: complex, tau: PeriodMatrix,
                               eps: float = DEFAULT_EPS_VALUE) -> float:
    """s_w(x−y)·θ[ζ]'(0)² = θ[ζ](x−y)²·(s_w(0)·Ω(x,y) + ½·s_w''(0)), relative residual."""
    _require_g1(tau, "the pullback identity")
    u = abel_difference_g1(x, y)
    f0, f2 = s_w_scalar_jet(w, tau, eps)
    th, _, _ = theta_values(np.array([[u - w], [u + w]]), tau, eps)
    slope = theta_char_jet(ODD_HALF, [0.0], tau, eps).gradient[0]
    odd = theta_char_jet(ODD_HALF, [u], tau, eps).value
    lhs = th[0] * th[1] * slope * slope
    rhs = odd * odd * (f0 * omega_g1(x, y, tau, eps) + 0.5 * f2)
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs)))


def pullback_batch(tau: PeriodMatrix, seed: int, count: int = 20, eps: float = DEFAULT_EPS_VALUE) -> float:
    rng = np.random.default_rng(seed)
    t = complex(tau.entries[0, 0])
    worst = 0.0
    for _ in tqdm(range(count), desc="[fay_check] pullback", disable=not sys.stderr.isatty()):
        w = random_point(rng, t, 0.5)
        x, y = random_point(rng, t), random_point(rng, t)
        worst = max(worst, pullback_identity_residual(w, x, y, tau, eps))
    return worst


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def register_commands(subparsers):
    p = subparsers.add_parser("fay", help="Genus-1 trisecant identity and Ω checks")
    sub = p.add_subparsers(dest="command", required=True)

    rs = sub.add_parser("residual", help="Trisecant residuals over random configurations")
    rs.add_argument("--tau", required=True, help="Period matrix JSON file (g = 1)")
    rs.add_argument("--seed", type=int, default=None, dest="fay_seed")
    rs.add_argument("--count", type=int, default=100)
    rs.add_argument("--out", default=None)
    rs.set_defaults(handler=handle)

    pr = sub.add_parser("periods", help="a- and b-periods of Ω(p, ·)")
    pr.add_argument("--tau", required=True)
    pr.add_argument("--p", default="0.21,0.37", help="Base point re,im")
    pr.add_argument("--base", default=None, help="Path start t as re,im (default p − (1+τ)/2)")
    pr.add_argument("--n", type=int, default=64, help="Trapezoid nodes per cycle")
    pr.add_argument("--out", default=None)
    pr.set_defaults(handler=handle)

    ab = sub.add_parser("a12b12", help="A12/B12 finite-difference check at random points")
    ab.add_argument("--tau", required=True)
    ab.add_argument("--seed", type=int, default=None, dest="fay_seed")
    ab.add_argument("--count", type=int, default=5)
    ab.add_argument("--out", default=None)
    ab.set_defaults(handler=handle)


def handle(args, config) -> int:
    tau = load_period_matrix(Path(args.tau))
    _require_g1(tau, f"fay {args.command}")
    eps = config.eps_value
    out = Path(args.out) if args.out else None
    seed = config.seed if getattr(args, "fay_seed", None) is None else args.fay_seed
    meta = {"eps": eps, "lattice_cap": lattice_cap(), "seed": seed}

    if args.command == "residual":
        if args.count < 1:
            raise InputError(f"--count must be positive, got {args.count}")
        log.info(f"[fay_check] {args.count} trisecant configurations, seed={seed}")
        emit_json(meta, residual_batch(tau, seed, args.count, eps, config.threads), out)
    elif args.command == "periods":
        p = parse_complex(args.p)
        base = parse_complex(args.base) if args.base else None
        a_per, b_per = period_check(tau, eps, args.n, p, base)
        a_sc, b_sc = period_shortcut(tau, p, base, eps)
        meta["n_quad"] = args.n
        emit_json(meta, {"a_period": a_per, "b_period": b_per,
                         "a_shortcut": a_sc, "b_shortcut": b_sc,
                         "b_error": abs(b_per - 2j * math.pi)}, out)
    else:
        rng = np.random.default_rng(seed)
        t = complex(tau.entries[0, 0])
        rows = []
        for _ in range(args.count):
            w = random_point(rng, t, 0.5)
            a1, a2 = random_point(rng, t), random_point(rng, t)
            r = a12_b12_check(w, a1, a2, tau, eps, config.fd_step)
            rows.append({"w": w, "a1": a1, "a2": a2, "resA": r["resA"], "resB": r["resB"],
                         "agreement": r["agreement"]})
        meta["fd_step"] = config.fd_step
        if config.output_format == "csv":
            emit_table(meta, ["w", "a1", "a2", "resA", "resB", "agreement"], rows, out, "csv")
        else:
            emit_json(meta, {"checks": rows, "max_resA": max(r["resA"] for r in rows),
                             "max_resB": max(r["resB"] for r in rows)}, out)
    return 0


def main():
    from run_config import RunConfig

    parser = argparse.ArgumentParser(description="Genus-1 trisecant and Ω checks")
    register_commands(parser.add_subparsers(dest="group", required=True))
    args = parser.parse_args(join_negative_values(["fay"] + sys.argv[1:]))
    try:
        sys.exit(args.handler(args, RunConfig()))
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
