#!/usr/bin/env python3
"""
theta_engine.py
Riemann theta functions θ(z;τ) and θ[ζ](z;τ) with z-jets up to order 2,
the products s_ζ(z) = θ(z−ζ)θ(z+ζ), and the constants c(ζ).

Every series is summed over a lattice ball whose radius is certified by a
Gaussian tail integral (see truncation_radius). The same lattice machinery
serves the level-2 series in sot.py through the `form` parameter:

    form = 1:  Σ_n exp(πi ⟨n, τn + 2(z+b)⟩),   n = m + a
    form = 2:  Σ_n exp(2πi ⟨n, τn + 2z⟩),       n = m + u

Tolerances are relative to the envelope peak exp(π·form·cᵗ(Im τ)c) with
c = −(Im τ)⁻¹ Im z; ThetaJet.scale carries that peak. For real z the bound
is absolute.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.integrate
import scipy.special

from errors import EpsilonTooSmall, NotOdd, ThetaBidiffError, ValueOverflow
from results import emit_json
from siegel_core import (Characteristic, PeriodMatrix, characteristic_arg,
                         join_negative_values, load_period_matrix,
                         parse_complex_vector)

log = logging.getLogger("thetabidiff.theta_engine")

DEFAULT_EPS_VALUE = 1e-13
DEFAULT_EPS_JET = 1e-11
DEFAULT_LATTICE_CAP = 200
LOG_DOUBLE_MAX = math.log(np.finfo(float).max)

_lattice_cap = DEFAULT_LATTICE_CAP


def configure(lattice_cap: int | None = None):
    """Set the process-wide lattice radius cap (RunConfig.lattice_cap)."""
    global _lattice_cap
    if lattice_cap is not None:
        _lattice_cap = int(lattice_cap)


def lattice_cap() -> int:
    return _lattice_cap


@dataclass(frozen=True)
class TruncationPlan:
    center: np.ndarray      # integer lattice point nearest the envelope centre
    radius: float
    bound: float
    origin: np.ndarray      # real envelope centre, in shifted coordinates n = m + a
    form: int = 1


@dataclass(frozen=True)
class ThetaJet:
    value: complex
    gradient: np.ndarray
    hessian: np.ndarray
    scale: float = 1.0
    radius: float = 0.0


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------
def _log_tail(g: int, lam: float, form: int, order: int, cnorm: float, radius: float) -> float:
    """log of S_g ∫_{R−√g}^∞ (ρ+√g)^{g−1} (2π·form·(ρ+√g+‖c‖))^order e^{−π·form·λρ²} dρ."""
    rg = math.sqrt(g)
    lo = max(radius - rg, 0.0)
    k = math.pi * form * lam
    surface = 2.0 * math.pi ** (g / 2.0) / scipy.special.gamma(g / 2.0)

    def integrand(t):
        rho = lo + t
        poly = (rho + rg) ** (g - 1) * (2.0 * math.pi * form * (rho + rg + cnorm)) ** order
        return poly * math.exp(-k * (2.0 * lo * t + t * t))

    value, _ = scipy.integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-8, limit=200)
    if value <= 0.0:
        return -math.inf
    return math.log(surface * value) - k * lo * lo


@lru_cache(maxsize=4096)
def _radius_for(g: int, lam: float, form: int, order: int, cnorm_q: float,
                eps: float, cap: int) -> tuple[float, float]:
    target = math.log(eps)
    radius = math.sqrt(g) + 0.5
    while True:
        lt = _log_tail(g, lam, form, order, cnorm_q, radius)
        if lt <= target:
            return radius, math.exp(lt)
        radius += 0.5
        if radius > cap:
            raise EpsilonTooSmall(
                f"lattice radius would exceed cap {cap} for eps={eps:g} "
                f"(λ_min(Im τ)={lam:.3g}, g={g}, order={order})")


def envelope_center(tau: PeriodMatrix, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return -(tau.im_inverse.matrix @ z.imag)


def truncation_radius(tau: PeriodMatrix, z, eps: float, order: int = 0,
                      shift=None, form: int = 1, spread: float = 0.0) -> TruncationPlan:
    """Radius R such that the tail of the series past the ball |n − c| ≤ R is below eps.

    `spread` enlarges R for batches whose envelope centres lie within that
    distance of `z`'s centre.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    g = tau.g
    a = np.zeros(g) if shift is None else np.asarray(shift, dtype=float)
    origin = envelope_center(tau, z)
    cnorm = float(np.linalg.norm(origin)) + spread
    # quantize ‖c‖ upward so nearby points share cached radii
    cnorm_q = math.ceil(cnorm * 4.0) / 4.0
    radius, bound = _radius_for(g, float(tau.lambda_min), int(form), int(order),
                                cnorm_q, float(eps), _lattice_cap)
    radius += spread
    if radius > _lattice_cap:
        raise EpsilonTooSmall(f"lattice radius {radius:.1f} exceeds cap {_lattice_cap}")
    center = np.rint(origin - a).astype(int)
    return TruncationPlan(center=center, radius=radius, bound=bound, origin=origin, form=form)


def lattice_points(plan: TruncationPlan, shift=None) -> np.ndarray:
    """Shifted lattice points n = m + a with |n − origin| ≤ R, in box order."""
    g = len(plan.center)
    a = np.zeros(g) if shift is None else np.asarray(shift, dtype=float)
    lo = np.floor(plan.origin - a - plan.radius).astype(int)
    hi = np.ceil(plan.origin - a + plan.radius).astype(int)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(g)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g)
    n = grid + a
    keep = np.sum((n - plan.origin) ** 2, axis=1) <= plan.radius ** 2
    return n[keep]


# ---------------------------------------------------------------------------
# Series evaluation
# ---------------------------------------------------------------------------
def series_terms(tau: PeriodMatrix, n: np.ndarray, zs: np.ndarray, b=None, form: int = 1) -> np.ndarray:
    """exp(π·form·i·(⟨n,τn⟩ + 2⟨n, z+b⟩)) for every z row and lattice point: shape (K, N)."""
    quad = np.einsum("ni,ij,nj->n", n, tau.entries, n)
    shifted = zs if b is None else zs + np.asarray(b, dtype=float)
    lin = np.sum(shifted[:, None, :] * n[None, :, :], axis=2)
    return np.exp(1j * math.pi * form * (quad[None, :] + 2.0 * lin))


def contract(terms: np.ndarray, n: np.ndarray, factor: complex, order: int):
    """Sum value, gradient and Hessian from precomputed terms (termwise derivatives)."""
    values = np.sum(terms, axis=1)
    if order == 0:
        return values, None, None
    g = n.shape[1]
    grads = factor * np.sum(terms[:, :, None] * n[None, :, :], axis=1)
    if order == 1:
        return values, grads, None
    hess = np.empty((terms.shape[0], g, g), dtype=complex)
    for i in range(g):
        for j in range(i, g):
            hij = factor * factor * np.sum(terms * (n[:, i] * n[:, j])[None, :], axis=1)
            hess[:, i, j] = hij
            hess[:, j, i] = hij
    return values, grads, hess


def envelope_exponent(tau: PeriodMatrix, zs: np.ndarray, form: int = 1) -> np.ndarray:
    c = -(zs.imag @ tau.im_inverse.matrix)
    return math.pi * form * np.einsum("ki,ij,kj->k", c, tau.im, c)


def evaluate_batch(tau: PeriodMatrix, zs, eps: float, order: int = 0,
                   shift=None, b=None, form: int = 1):
    """Series and z-derivatives at many points from one shared lattice.

    Returns (values, gradients, hessians, scales, plan).
    """
    zs = np.atleast_2d(np.asarray(zs, dtype=complex))
    if zs.shape[1] != tau.g:
        raise ValueError(f"z has dimension {zs.shape[1]}, τ has genus {tau.g}")
    centres = -(zs.imag @ tau.im_inverse.matrix)
    mid = 0.5 * (centres.min(axis=0) + centres.max(axis=0))
    spread = float(np.max(np.linalg.norm(centres - mid, axis=1)))
    # z with envelope centre `mid`: only Im z matters for the plan
    z_mid = 1j * (-(tau.im @ mid))
    exponents = envelope_exponent(tau, zs, form)
    if exponents.max() > LOG_DOUBLE_MAX:
        k = int(np.argmax(exponents))
        raise ValueOverflow(f"series at z={zs[k].tolist()!r} has envelope e^{exponents[k]:.4g}, "
                            "beyond double range")
    scales = np.exp(exponents)
    plan = truncation_radius(tau, z_mid, eps, order, shift=shift, form=form, spread=spread)
    n = lattice_points(plan, shift)
    terms = series_terms(tau, n, zs, b=b, form=form)
    values, grads, hess = contract(terms, n, 2j * math.pi * form, order)
    return values, grads, hess, scales, plan


def _as_z(z, g: int) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (g,):
        raise ValueError(f"z must be a {g}-vector, got shape {z.shape}")
    return z


def _jet(values, grads, hess, scales, plan, k: int = 0) -> ThetaJet:
    return ThetaJet(value=complex(values[k]), gradient=grads[k], hessian=hess[k],
                    scale=float(scales[k]), radius=plan.radius)


def theta_jet(z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> ThetaJet:
    z = _as_z(z, tau.g)
    return _jet(*evaluate_batch(tau, z[None, :], eps, order=2))


def theta_value(z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> complex:
    z = _as_z(z, tau.g)
    values, *_ = evaluate_batch(tau, z[None, :], eps, order=0)
    return complex(values[0])


def theta_char_jet(c: Characteristic, z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> ThetaJet:
    z = _as_z(z, tau.g)
    return _jet(*evaluate_batch(tau, z[None, :], eps, order=2, shift=c.a, b=c.b))


def theta_char_values(c: Characteristic, zs, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE,
                      order: int = 0):
    """Vectorized θ[ζ] over many points; returns (values, gradients, hessians)."""
    values, grads, hess, _, _ = evaluate_batch(tau, zs, eps, order=order, shift=c.a, b=c.b)
    return values, grads, hess


def theta_values(zs, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE, order: int = 0):
    values, grads, hess, _, _ = evaluate_batch(tau, zs, eps, order=order)
    return values, grads, hess


def s_zeta_jet(c: Characteristic, z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> ThetaJet:
    """Jet of s_ζ(z) = θ(z−ζ)θ(z+ζ) by the Leibniz rule."""
    z = _as_z(z, tau.g)
    zeta = c.point(tau)
    lo = theta_jet(z - zeta, tau, eps)
    hi = theta_jet(z + zeta, tau, eps)
    value = lo.value * hi.value
    gradient = lo.gradient * hi.value + lo.value * hi.gradient
    cross = np.outer(lo.gradient, hi.gradient)
    hessian = lo.hessian * hi.value + (cross + cross.T) + lo.value * hi.hessian
    return ThetaJet(value=value, gradient=gradient, hessian=hessian,
                    scale=lo.scale * hi.scale, radius=max(lo.radius, hi.radius))


def c_zeta(c: Characteristic, tau: PeriodMatrix) -> complex:
    """c(ζ) = −exp(2πi⟨a, τa + 2b⟩)."""
    a, b = c.a, c.b
    return complex(-np.exp(2j * math.pi * (a @ tau.entries @ a + 2.0 * (a @ b))))


def c_odd(c: Characteristic, tau: PeriodMatrix) -> complex:
    """c(ζ) = exp(2πi⟨a, τa⟩) for odd half-integer ζ, so that θ[ζ]² = c(ζ)·s_ζ."""
    if c.parity != "odd":
        raise NotOdd(f"characteristic a={c.label()[0]!r}, b={c.label()[1]!r} "
                     f"has parity {c.parity!r}")
    a = c.a
    return complex(np.exp(2j * math.pi * (a @ tau.entries @ a)))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def register_commands(subparsers):
    p = subparsers.add_parser("theta", help="Evaluate θ(z;τ) and θ[ζ](z;τ)")
    sub = p.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("eval", help="Evaluate the series (and jet) at one point")
    ev.add_argument("--tau", required=True, help="Period matrix JSON file")
    ev.add_argument("--z", required=True, help='Point as "re,im;re,im;..."')
    ev.add_argument("--char", default=None, help='Characteristic "a1 ..,b1 .." (rationals, e.g. "1/2,1/2") or a JSON file')
    ev.add_argument("--jet", action="store_true", help="Also report gradient and Hessian")
    ev.add_argument("--out", default=None, help="Write JSON here instead of stdout")
    ev.set_defaults(handler=handle)


def handle(args, config) -> int:
    tau = load_period_matrix(Path(args.tau))
    z = parse_complex_vector(args.z)
    char = characteristic_arg(args.char) if args.char else None
    eps = config.eps_jet if args.jet else config.eps_value
    shift, b = (char.a, char.b) if char else (None, None)
    order = 2 if args.jet else 0

    log.info(f"[theta_engine] g={tau.g} z={args.z} char={args.char or 'none'} eps={eps:g}")
    values, grads, hess, scales, plan = evaluate_batch(tau, _as_z(z, tau.g)[None, :], eps,
                                                       order=order, shift=shift, b=b)
    result = {"value": complex(values[0]), "eps": eps, "radius": plan.radius}
    if args.jet:
        result["gradient"] = grads[0]
        result["hessian"] = hess[0]
    meta = {"eps": eps, "lattice_cap": lattice_cap(), "seed": config.seed,
            "radius": plan.radius, "bound": plan.bound, "scale": float(scales[0]),
            "g": tau.g}
    if char is not None:
        meta["characteristic"] = {"a": char.label()[0], "b": char.label()[1], "parity": char.parity}
    emit_json(meta, result, Path(args.out) if args.out else None)
    return 0


def main():
    from run_config import RunConfig

    parser = argparse.ArgumentParser(description="Theta function evaluation")
    register_commands(parser.add_subparsers(dest="group", required=True))
    args = parser.parse_args(join_negative_values(["theta"] + sys.argv[1:]))
    try:
        sys.exit(args.handler(args, RunConfig()))
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
