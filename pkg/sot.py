#!/usr/bin/env python3
"""
sot.py
Second-order theta functions

    θ_u(z; τ) = Σ_ξ exp(2πi (ξ+u)ᵗτ(ξ+u) + 4πi (ξ+u)ᵗz),   u ∈ {0, 1/2}^g,

their jets at the origin, τ-derivatives, and the genus-1 Hermitian Gram
matrix on the fundamental parallelogram.

τ-derivatives use the upper-triangle parametrization of symmetric τ
(τ_ij and τ_ji move together), which is where the (2 − δ_ij) factor of the
heat identity comes from:

    ∂²θ_u/∂z_i∂z_j = 8πi / (2 − δ_ij) · ∂θ_u/∂τ_ij
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from errors import InputError, NotSupported, ThetaBidiffError
from results import emit_json
from siegel_core import (PeriodMatrix, join_negative_values, load_period_matrix,
                         parse_complex_vector, second_order_indices,
                         validate_period_matrix)
from theta_engine import (DEFAULT_EPS_JET, DEFAULT_EPS_VALUE, contract,
                          evaluate_batch, lattice_cap, lattice_points,
                          series_terms, truncation_radius)

log = logging.getLogger("thetabidiff.sot")

FORM = 2
# Hermitian weight exp(−WEIGHT·(Im z)ᵗ(Im τ)⁻¹(Im z)) that makes |θ_u|² doubly periodic
WEIGHT = 4.0 * math.pi


@dataclass(frozen=True)
class SecondOrderIndex:
    u: tuple

    @property
    def g(self) -> int:
        return len(self.u)

    @property
    def vector(self) -> np.ndarray:
        return np.array([float(q) for q in self.u])

    def label(self) -> str:
        return ",".join(str(q) for q in self.u)


@dataclass(frozen=True)
class SotJet0:
    value0: complex
    hessian0: np.ndarray
    tau_deriv: np.ndarray
    scale: float = 1.0


def indices(g: int) -> list[SecondOrderIndex]:
    """The 2^g indices in fixed lexicographic order."""
    return [SecondOrderIndex(u) for u in second_order_indices(g)]


def parse_index(text: str) -> SecondOrderIndex:
    try:
        u = tuple(Fraction(t) for t in text.split(","))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"cannot parse second-order index {text!r}: {e}")
    if any(q not in (0, Fraction(1, 2)) for q in u):
        raise InputError(f"second-order index entries must be 0 or 1/2, got {text!r}")
    return SecondOrderIndex(u)


def sot_values(u: SecondOrderIndex, zs, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> np.ndarray:
    values, *_ = evaluate_batch(tau, zs, eps, order=0, shift=u.vector, form=FORM)
    return values


def sot_value(u: SecondOrderIndex, z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> complex:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return complex(sot_values(u, z[None, :], tau, eps)[0])


def sot_jet0(u: SecondOrderIndex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> SotJet0:
    g = tau.g
    zero = np.zeros(g, dtype=complex)
    plan = truncation_radius(tau, zero, eps, order=2, shift=u.vector, form=FORM)
    n = lattice_points(plan, u.vector)
    terms = series_terms(tau, n, zero[None, :], form=FORM)
    values, _, hess = contract(terms, n, 2j * math.pi * FORM, order=2)

    tau_deriv = np.empty((g, g), dtype=complex)
    for i in range(g):
        for j in range(i, g):
            coeff = 1j * math.pi * FORM * (2 - (i == j))
            tau_deriv[i, j] = tau_deriv[j, i] = coeff * np.sum(terms[0] * n[:, i] * n[:, j])
    return SotJet0(value0=complex(values[0]), hessian0=hess[0], tau_deriv=tau_deriv)


def heat_factor(g: int) -> np.ndarray:
    """8πi / (2 − δ_ij)."""
    return 8j * math.pi / (2.0 - np.eye(g))


def heat_identity_residual(u: SecondOrderIndex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> float:
    jet = sot_jet0(u, tau, eps)
    diff = jet.hessian0 - heat_factor(tau.g) * jet.tau_deriv
    return float(np.max(np.abs(diff)) / max(np.max(np.abs(jet.hessian0)), np.finfo(float).tiny))


def tau_fd_residual(u: SecondOrderIndex, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE,
                    h: float = 1e-5) -> float:
    """Max relative error of the termwise ∂θ_u(0)/∂τ_ij against central differences in τ_ij.

    The differenced values come from the same order-2 truncation as the
    termwise derivative, so the comparison isolates the O(h²) FD error.
    """
    g = tau.g
    jet = sot_jet0(u, tau, eps)
    fd = np.empty((g, g), dtype=complex)
    for i in range(g):
        for j in range(i, g):
            e = np.zeros((g, g))
            e[i, j] = e[j, i] = h
            up = sot_jet0(u, validate_period_matrix(tau.entries + e), eps).value0
            dn = sot_jet0(u, validate_period_matrix(tau.entries - e), eps).value0
            fd[i, j] = fd[j, i] = (up - dn) / (2.0 * h)
    return float(np.max(np.abs(fd - jet.tau_deriv)) / max(np.max(np.abs(jet.tau_deriv)), np.finfo(float).tiny))


def weighted_modulus(u: SecondOrderIndex, z, tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> float:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    y = z.imag
    return float(abs(sot_value(u, z, tau, eps)) ** 2 * math.exp(-WEIGHT * (y @ tau.im_inverse.matrix @ y)))


def sot_w(tau: PeriodMatrix, eps: float = DEFAULT_EPS_VALUE) -> float:
    """Σ_u |θ_u(0)|²."""
    zero = np.zeros(tau.g)
    return float(sum(abs(sot_value(u, zero, tau, eps)) ** 2 for u in indices(tau.g)))


# ---------------------------------------------------------------------------
# Genus-1 inner products
# ---------------------------------------------------------------------------
def _parallelogram_grid(tau: PeriodMatrix, n_quad: int) -> np.ndarray:
    t = np.arange(n_quad) / n_quad
    s_grid, t_grid = np.meshgrid(t, t, indexing="ij")
    return (s_grid + t_grid * tau.entries[0, 0]).reshape(-1, 1)


def _weight(tau: PeriodMatrix, zs: np.ndarray) -> np.ndarray:
    y = zs[:, 0].imag
    return np.exp(-WEIGHT * y * y / tau.im[0, 0])


def inner_product_g1(u: SecondOrderIndex, v: SecondOrderIndex, tau: PeriodMatrix,
                     n_quad: int = 128, eps: float = DEFAULT_EPS_VALUE) -> complex:
    """∫ θ_u conj(θ_v) e^{−4π(Im z)²/Im τ} dA over {s + tτ : s,t ∈ [0,1)}, periodic trapezoid rule."""
    if tau.g != 1:
        raise NotSupported(f"inner products are implemented for g = 1 only (got g = {tau.g})")
    zs = _parallelogram_grid(tau, n_quad)
    weight = _weight(tau, zs)
    fu = sot_values(u, zs, tau, eps)
    fv = fu if v == u else sot_values(v, zs, tau, eps)
    area = float(tau.im[0, 0])
    return complex(np.sum(fu * np.conj(fv) * weight) * area / n_quad ** 2)


def gram(tau: PeriodMatrix, n_quad: int = 128, eps: float = DEFAULT_EPS_VALUE) -> np.ndarray:
    if tau.g != 1:
        raise NotSupported(f"Gram matrix quadrature is implemented for g = 1 only (got g = {tau.g})")
    zs = _parallelogram_grid(tau, n_quad)
    weight = _weight(tau, zs)
    basis = indices(1)
    vals = [sot_values(u, zs, tau, eps) for u in basis]
    area = float(tau.im[0, 0])
    out = np.empty((len(basis), len(basis)), dtype=complex)
    for i, fu in enumerate(vals):
        for j, fv in enumerate(vals):
            out[i, j] = np.sum(fu * np.conj(fv) * weight) * area / n_quad ** 2
    return out


def gram_ratios(matrix: np.ndarray) -> tuple[float, float]:
    """(max |off-diagonal| / min diagonal, |diag ratio − 1|)."""
    diag = np.real(np.diag(matrix))
    off = np.abs(matrix - np.diag(np.diag(matrix)))
    return float(off.max() / diag.min()), float(abs(diag[0] / diag[1] - 1.0))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def register_commands(subparsers):
    p = subparsers.add_parser("sot", help="Second-order theta functions")
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="Evaluate θ_u(z;τ)")
    ev.add_argument("--tau", required=True, help="Period matrix JSON file")
    ev.add_argument("--u", required=True, help='Index as comma-separated entries in {0,1/2}, e.g. "0,1/2"')
    ev.add_argument("--z", default=None, help='Point "re,im;..." (default: origin, with jet)')
    ev.add_argument("--out", default=None)
    ev.set_defaults(handler=handle)

    gr = sub.add_parser("gram", help="Gram matrix of the 2^g sections (g = 1)")
    gr.add_argument("--tau", required=True, help="Period matrix JSON file")
    gr.add_argument("--n", type=int, default=128, help="Quadrature points per side (default: 128)")
    gr.add_argument("--out", default=None)
    gr.set_defaults(handler=handle)


def handle(args, config) -> int:
    tau = load_period_matrix(Path(args.tau))
    meta = {"eps": config.eps_value, "lattice_cap": lattice_cap(), "seed": config.seed, "g": tau.g}
    out = Path(args.out) if args.out else None

    if args.command == "eval":
        u = parse_index(args.u)
        if u.g != tau.g:
            raise InputError(f"index {args.u!r} has length {u.g}, τ has genus {tau.g}")
        if args.z is None:
            jet = sot_jet0(u, tau, config.eps_jet)
            meta["eps"] = config.eps_jet
            result = {"u": u.label(), "value": jet.value0, "hessian": jet.hessian0,
                      "tau_deriv": jet.tau_deriv,
                      "heat_residual": heat_identity_residual(u, tau, config.eps_jet)}
        else:
            z = parse_complex_vector(args.z)
            result = {"u": u.label(), "value": sot_value(u, z, tau, config.eps_value)}
        emit_json(meta, result, out)
        return 0

    if args.n < 2:
        raise InputError(f"--n must be at least 2, got {args.n}")
    log.info(f"[sot] Gram matrix, N={args.n}")
    matrix = gram(tau, args.n, config.eps_value)
    off_ratio, diag_ratio = gram_ratios(matrix)
    meta["n_quad"] = args.n
    emit_json(meta, {"gram": matrix, "offdiag_ratio": off_ratio, "diag_ratio_error": diag_ratio}, out)
    return 0


def main():
    from run_config import RunConfig

    parser = argparse.ArgumentParser(description="Second-order theta functions")
    register_commands(parser.add_subparsers(dest="group", required=True))
    args = parser.parse_args(join_negative_values(["sot"] + sys.argv[1:]))
    try:
        sys.exit(args.handler(args, RunConfig()))
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
