#!/usr/bin/env python3
"""
bidiff.py
Holomorphic parts of bidifferentials pulled back along the difference map.

A section f of 2Θ pulls back to

    Ψ(φ*f) = f(0)·Ω + ½ Σ_ij f_ij(0) p₁*ω_i ∧ p₂*ω_j,

so a bidifferential is stored as the pair (omega_coeff, holo_matrix). Ω is a
symbolic basis element here; it is evaluated numerically only at genus 1 in
fay_check.py.

The σ correction is the holomorphic part of the normalized pullback of the
generator Σ_u conj(θ_u(0))·θ_u; the η correction is −π(Im τ)⁻¹. For g ≥ 2 both
are computed for any τ in ℍ_g, and their difference means σ − η only when τ
is the period matrix of a curve.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from errors import (DenominatorUnderflow, InputError, NotOnThetaDivisor,
                    ThetaBidiffError)
from results import emit_csv, emit_json
from run_config import ordered_map
from siegel_core import (Characteristic, PeriodMatrix, join_negative_values,
                         load_period_matrix, odd_characteristics,
                         parse_complex_vector)
from sot import indices, sot_jet0
from theta_engine import (DEFAULT_EPS_JET, c_zeta, lattice_cap, s_zeta_jet,
                          theta_char_jet, theta_jet)

log = logging.getLogger("thetabidiff.bidiff")

DIVISOR_TOL = 1e-6
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class PullbackCoefficients:
    omega_coeff: complex
    holo_matrix: np.ndarray


@dataclass(frozen=True)
class CorrectionMatrix:
    entries: np.ndarray
    kind: str   # sigma | eta | difference

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries, "fro"))


@dataclass(frozen=True)
class BasisSection:
    """Section Σ_u coeffs[u]·θ_u over the lexicographic θ_u order."""
    coeffs: np.ndarray


@dataclass(frozen=True)
class PointSection:
    """The section s_w(z) = θ(z−w)θ(z+w)."""
    w: np.ndarray


def s_w_jet0(w, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> tuple[complex, np.ndarray]:
    """f(0) = θ(w)², f_ij(0) = 2θ(w)θ_ij(w) − 2θ_i(w)θ_j(w)."""
    jet = theta_jet(w, tau, eps)
    f0 = jet.value * jet.value
    fij = 2.0 * jet.value * jet.hessian - 2.0 * np.outer(jet.gradient, jet.gradient)
    return f0, fij


def sot_jets(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> list:
    return ordered_map(lambda u: sot_jet0(u, tau, eps), indices(tau.g), threads)


def pullback_coefficients(f, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET,
                          jets: list | None = None) -> PullbackCoefficients:
    if isinstance(f, PointSection):
        f0, fij = s_w_jet0(f.w, tau, eps)
        return PullbackCoefficients(omega_coeff=f0, holo_matrix=0.5 * fij)
    if not isinstance(f, BasisSection):
        raise InputError(f"section must be a BasisSection or PointSection, got {type(f).__name__}")

    coeffs = np.asarray(f.coeffs, dtype=complex)
    if coeffs.shape != (2 ** tau.g,):
        raise InputError(f"basis section needs {2 ** tau.g} coefficients, got {coeffs.shape}")
    jets = sot_jets(tau, eps) if jets is None else jets
    omega = complex(sum(c * j.value0 for c, j in zip(coeffs, jets)))
    holo = 0.5 * sum(c * j.hessian0 for c, j in zip(coeffs, jets))
    return PullbackCoefficients(omega_coeff=omega, holo_matrix=holo)


def omega_zeta_coeffs(c: Characteristic, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> np.ndarray:
    """Coefficients of ω_ζ = Σ ∂θ[ζ]/∂z_i(0)·ω_i."""
    on_divisor = theta_jet(c.point(tau), tau, eps)
    if abs(on_divisor.value) >= DIVISOR_TOL * on_divisor.scale:
        raise NotOnThetaDivisor(f"|θ(ζ)| = {abs(on_divisor.value):.3g} "
                                f"(scale {on_divisor.scale:.3g}) for a={c.label()[0]!r}, b={c.label()[1]!r}")
    return theta_char_jet(c, np.zeros(tau.g), tau, eps).gradient


def gunning_residual(c: Characteristic, tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> float:
    """Relative error of 2·θ[ζ]_i(0)θ[ζ]_j(0) = c(ζ)·(s_ζ)_ij(0)."""
    grad = omega_zeta_coeffs(c, tau, eps)
    lhs = 2.0 * np.outer(grad, grad)
    rhs = c_zeta(c, tau) * s_zeta_jet(c, np.zeros(tau.g), tau, eps).hessian
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), np.finfo(float).tiny))


def gunning_table(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> list[dict]:
    chars = odd_characteristics(tau.g)
    residuals = ordered_map(lambda c: gunning_residual(c, tau, eps), chars, threads)
    return [{"a": c.label()[0], "b": c.label()[1], "parity": c.parity, "residual": r}
            for c, r in zip(chars, residuals)]


# ---------------------------------------------------------------------------
# σ and η
# ---------------------------------------------------------------------------
def _denominator(jets) -> float:
    w = float(sum(abs(j.value0) ** 2 for j in jets))
    if w < UNDERFLOW:
        raise DenominatorUnderflow(f"Σ_u |θ_u(0)|² = {w:.3g}")
    return w


def sigma_correction(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> CorrectionMatrix:
    """S_ij = Σ_u conj(θ_u(0))·∂²θ_u/∂z_i∂z_j(0) / (2 Σ_u |θ_u(0)|²)."""
    jets = sot_jets(tau, eps, threads)
    w = _denominator(jets)
    total = sum(np.conj(j.value0) * j.hessian0 for j in jets)
    return CorrectionMatrix(entries=total / (2.0 * w), kind="sigma")


def sigma_generator(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET,
                    jets: list | None = None) -> np.ndarray:
    """Coefficients of s = Σ_u conj(θ_u(0))·θ_u, the generator orthogonal to sections vanishing at 0."""
    jets = sot_jets(tau, eps) if jets is None else jets
    return np.array([np.conj(j.value0) for j in jets])


def sigma_correction_via_generator(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> CorrectionMatrix:
    jets = sot_jets(tau, eps)
    pc = pullback_coefficients(BasisSection(sigma_generator(tau, eps, jets)), tau, eps, jets=jets)
    if abs(pc.omega_coeff) < UNDERFLOW:
        raise DenominatorUnderflow(f"generator value at the origin is {abs(pc.omega_coeff):.3g}")
    return CorrectionMatrix(entries=pc.holo_matrix / pc.omega_coeff, kind="sigma")


def sigma_correction_heat_g1(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET) -> CorrectionMatrix:
    """σ at genus 1 as (4πi/w)·∂w/∂τ with ∂w/∂τ = (w_x − i·w_y)/2."""
    from locus_g1 import w_jet

    if tau.g != 1:
        raise InputError(f"heat-route σ needs g = 1, got g = {tau.g}")
    t = complex(tau.entries[0, 0])
    wj = w_jet(t.real, t.imag, eps)
    w_tau = 0.5 * (wj.w_x - 1j * wj.w_y)
    return CorrectionMatrix(entries=np.array([[4j * math.pi * w_tau / wj.w]]), kind="sigma")


def eta_correction(tau: PeriodMatrix) -> CorrectionMatrix:
    return CorrectionMatrix(entries=-math.pi * tau.im_inverse.matrix.astype(complex), kind="eta")


def correction_difference(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> CorrectionMatrix:
    sigma = sigma_correction(tau, eps, threads)
    return CorrectionMatrix(entries=sigma.entries - eta_correction(tau).entries, kind="difference")


def coincidence_residual(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> float:
    """max |σ − η|, zero exactly on the coincidence locus."""
    return correction_difference(tau, eps, threads).max_norm()


# ---------------------------------------------------------------------------
# V₀₀
# ---------------------------------------------------------------------------
def v00_matrix(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, threads: int = 1) -> np.ndarray:
    """Rows u: (θ_u(0), ∂²θ_u/∂z_i∂z_j(0) for i ≤ j)."""
    g = tau.g
    iu = np.triu_indices(g)
    rows = [np.concatenate(([j.value0], j.hessian0[iu])) for j in sot_jets(tau, eps, threads)]
    return np.array(rows)


def _scaled(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def v00_analysis(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, rank_tol: float = 1e-8,
                 threads: int = 1) -> dict:
    scaled = _scaled(v00_matrix(tau, eps, threads))
    sv = scipy.linalg.svdvals(scaled)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    return {"dim": 2 ** tau.g - rank, "rank": rank, "singular_values": sv.tolist(),
            "expected": 2 ** tau.g - tau.g * (tau.g + 1) // 2 - 1}


def v00_kernel_dimension(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, rank_tol: float = 1e-8) -> int:
    return v00_analysis(tau, eps, rank_tol)["dim"]


def v00_basis(tau: PeriodMatrix, eps: float = DEFAULT_EPS_JET, rank_tol: float = 1e-8) -> np.ndarray:
    """Columns: θ_u-coefficient vectors of sections in the kernel of the pullback."""
    scaled = _scaled(v00_matrix(tau, eps))
    return scipy.linalg.null_space(scaled.T, rcond=rank_tol)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def register_commands(subparsers):
    p = subparsers.add_parser("bidiff", help="σ/η correction matrices, V₀₀ rank, Gunning identity")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("sigma", "σ correction matrix"),
                       ("eta", "η correction matrix −π(Im τ)⁻¹"),
                       ("diff", "σ − η with max and Frobenius norms"),
                       ("v00", "dim V₀₀ by numerical rank"),
                       ("gunning", "per-characteristic Gunning identity residuals (CSV)")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--tau", required=True, help="Period matrix JSON file")
        cmd.add_argument("--out", default=None)
        cmd.set_defaults(handler=handle)
    pb = sub.add_parser("pullback", help="Ψ(φ*s_w) coefficients for a point w")
    pb.add_argument("--tau", required=True)
    pb.add_argument("--w", required=True, help='Point "re,im;..."')
    pb.add_argument("--out", default=None)
    pb.set_defaults(handler=handle)


def handle(args, config) -> int:
    tau = load_period_matrix(Path(args.tau))
    eps = config.eps_jet
    meta = {"eps": eps, "lattice_cap": lattice_cap(), "seed": config.seed, "g": tau.g}
    out = Path(args.out) if args.out else None
    cmd = args.command

    if cmd == "sigma":
        emit_json(meta, {"kind": "sigma", "matrix": sigma_correction(tau, eps, config.threads).entries}, out)
    elif cmd == "eta":
        emit_json(meta, {"kind": "eta", "matrix": eta_correction(tau).entries}, out)
    elif cmd == "diff":
        diff = correction_difference(tau, eps, config.threads)
        emit_json(meta, {"kind": "difference", "matrix": diff.entries,
                         "max_norm": diff.max_norm(), "frobenius": diff.frobenius()}, out)
    elif cmd == "v00":
        meta["rank_tol"] = config.rank_tol
        emit_json(meta, v00_analysis(tau, eps, config.rank_tol, config.threads), out)
    elif cmd == "gunning":
        rows = gunning_table(tau, eps, config.threads)
        log.info(f"[bidiff] {len(rows)} odd characteristics at g={tau.g}")
        emit_csv(meta, ["a", "b", "parity", "residual"],
                 [[r["a"], r["b"], r["parity"], r["residual"]] for r in rows], out)
    elif cmd == "pullback":
        pc = pullback_coefficients(PointSection(parse_complex_vector(args.w)), tau, eps)
        emit_json(meta, {"omega_coeff": pc.omega_coeff, "holo_matrix": pc.holo_matrix}, out)
    return 0


def main():
    from run_config import RunConfig

    parser = argparse.ArgumentParser(description="Bidifferential correction matrices")
    register_commands(parser.add_subparsers(dest="group", required=True))
    args = parser.parse_args(join_negative_values(["bidiff"] + sys.argv[1:]))
    try:
        sys.exit(args.handler(args, RunConfig()))
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
