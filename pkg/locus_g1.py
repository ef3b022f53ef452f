#!/usr/bin/env python3
"""
locus_g1.py
The genus-1 coincidence locus {σ_τ = η_τ} in the upper half-plane.

With τ = x + iy,

    w(x, y) = Σ_{(m,n)∈ℤ²} exp(2πi·x·mn − πy(m² + n²)) = |θ_0(0)|² + |θ_{1/2}(0)|²,

and σ_τ = η_τ exactly when

    r1 = w_x = 0,    r2 = 2y·w_y + w = 0.

Usage:
  python3 locus_g1.py scan --window -0.5,0.5,0.5,1.5 --grid 101,101 --out scan.csv [--resume]
  python3 locus_g1.py refine --seed 0.05,0.95 [--seed 0.45,0.9 ...]
  python3 locus_g1.py isolation --center 0,1
"""
import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.integrate
import scipy.linalg
from tqdm import tqdm

from errors import (EpsilonTooSmall, InputError, NoConvergence,
                    SingularJacobian, ThetaBidiffError)
from results import (atomic_write_text, emit_json, emit_table, read_csv,
                     render_csv)
from run_config import ordered_map
from siegel_core import join_negative_values
from theta_engine import DEFAULT_EPS_VALUE, lattice_cap

log = logging.getLogger("thetabidiff.locus_g1")

IMAG_RESIDUE_TOL = 1e-12
IMAG_RESIDUE_FLAG = "ImagResidue"   # sample kept, res valid
CONVERGED_RES = 1e-10
MAX_CONDITION = 1e12
SCAN_COLUMNS = ["x", "y", "w", "wx", "wy", "r1", "r2", "res", "err"]


@dataclass(frozen=True)
class WJet:
    x: float
    y: float
    w: float
    w_x: float
    w_y: float
    w_xx: float
    w_yy: float
    w_xy: float
    imag_residue: float = 0.0   # max |Im| over the six sums, relative to max(w, 1)


@dataclass(frozen=True)
class LocusSample:
    x: float
    y: float
    w: float
    w_x: float
    w_y: float
    r1: float
    r2: float
    res: float
    err: str = ""

    def row(self) -> list:
        return [self.x, self.y, self.w, self.w_x, self.w_y, self.r1, self.r2, self.res, self.err]


@dataclass(frozen=True)
class RefineResult:
    sample: LocusSample
    iterations: int


# ---------------------------------------------------------------------------
# Lattice sum
# ---------------------------------------------------------------------------
def lattice_bound(y: float, eps: float = DEFAULT_EPS_VALUE) -> int:
    """Smallest M such that terms with max(|m|,|n|) > M, weighted by (1 + πr²)², sum below eps."""
    if not y > 0.0:
        raise InputError(f"y must be positive, got {y!r}")
    return _lattice_bound(float(y), float(eps), lattice_cap())


@lru_cache(maxsize=1024)
def _lattice_bound(y: float, eps: float, cap: int) -> int:
    rg = math.sqrt(2.0)
    k = math.pi * y
    target = math.log(eps)
    M = 2
    while True:
        lo = max(M - rg, 0.0)

        def integrand(t):
            r = lo + t + rg
            return r * (1.0 + math.pi * r * r) ** 2 * math.exp(-k * (2.0 * lo * t + t * t))

        value, _ = scipy.integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-8, limit=200)
        if value > 0.0 and math.log(2.0 * math.pi * value) - k * lo * lo <= target:
            return M
        M += 1
        if M > cap:
            raise EpsilonTooSmall(f"w lattice bound exceeds cap {cap} at y={y!r}, eps={eps:g}")


@lru_cache(maxsize=64)
def _grid(M: int):
    r = np.arange(-M, M + 1, dtype=float)
    m, n = np.meshgrid(r, r, indexing="ij")
    return (m * n).ravel(), (m * m + n * n).ravel(), ((m + n) % 2 == 0).ravel()


def _terms(x: float, y: float, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mn, r2, _ = _grid(M)
    return mn, r2, np.exp(2j * math.pi * x * mn - math.pi * y * r2)


def w_jet(x: float, y: float, eps: float = DEFAULT_EPS_VALUE, M: int | None = None) -> WJet:
    M = lattice_bound(y, eps) if M is None else M
    mn, r2, t = _terms(x, y, M)
    dx = 2j * math.pi * mn
    dy = -math.pi * r2
    sums = {"w": complex(np.sum(t)),
            "w_x": complex(np.sum(dx * t)),
            "w_y": complex(np.sum(dy * t)),
            "w_xx": complex(np.sum(dx * dx * t)),
            "w_yy": complex(np.sum(dy * dy * t)),
            "w_xy": complex(np.sum(dx * dy * t))}
    ref = max(abs(sums["w"].real), 1.0)
    residue = max(abs(v.imag) for v in sums.values()) / ref
    if residue > IMAG_RESIDUE_TOL:
        worst = max(sums, key=lambda k: abs(sums[k].imag))
        log.warning(f"[locus_g1] {worst} has imaginary residue {sums[worst].imag:.3g} at ({x!r}, {y!r})")
    return WJet(x=x, y=y, imag_residue=residue,
                **{k: float(v.real) for k, v in sums.items()})


def w_split(x: float, y: float, eps: float = DEFAULT_EPS_VALUE) -> tuple[float, float]:
    """(Σ over m+n even, Σ over m+n odd); these are |θ_0(0)|² and |θ_{1/2}(0)|²."""
    M = lattice_bound(y, eps)
    _, _, even = _grid(M)
    _, _, t = _terms(x, y, M)
    return float(np.sum(t[even]).real), float(np.sum(t[~even]).real)


def residuals(x: float, y: float, eps: float = DEFAULT_EPS_VALUE, M: int | None = None) -> LocusSample:
    j = w_jet(x, y, eps, M)
    r1 = j.w_x
    r2 = 2.0 * y * j.w_y + j.w
    return LocusSample(x=x, y=y, w=j.w, w_x=j.w_x, w_y=j.w_y, r1=r1, r2=r2,
                       res=math.hypot(r1, r2) / j.w,
                       err=IMAG_RESIDUE_FLAG if j.imag_residue > IMAG_RESIDUE_TOL else "")


def holomorphic_residual(x: float, y: float, eps: float = DEFAULT_EPS_VALUE) -> complex:
    """4i·y·w_τ + w with w_τ = (w_x − i·w_y)/2; equals r2 + i·2y·r1."""
    j = w_jet(x, y, eps)
    w_tau = 0.5 * (j.w_x - 1j * j.w_y)
    return 4j * y * w_tau + j.w


def failed_sample(x: float, y: float, err: ThetaBidiffError) -> LocusSample:
    nan = float("nan")
    return LocusSample(x=x, y=y, w=nan, w_x=nan, w_y=nan, r1=nan, r2=nan, res=nan, err=err.name)


# ---------------------------------------------------------------------------
# Scan
# ---------------------------------------------------------------------------
def scan_axes(x_min, x_max, y_min, y_max, nx, ny) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < y_min < y_max:
        raise InputError(f"need 0 < y_min < y_max, got y_min={y_min!r}, y_max={y_max!r}")
    if not x_min < x_max:
        raise InputError(f"need x_min < x_max, got {x_min!r}, {x_max!r}")
    if nx < 2 or ny < 2:
        raise InputError(f"grid must be at least 2x2, got {nx}x{ny}")
    return np.linspace(x_min, x_max, nx), np.linspace(y_min, y_max, ny)


def scan_row(xs: np.ndarray, y: float, eps: float, M: int) -> list[LocusSample]:
    row = []
    for x in xs:
        try:
            row.append(residuals(float(x), float(y), eps, M))
        except ThetaBidiffError as e:
            row.append(failed_sample(float(x), float(y), e))
    return row


def scan(x_min, x_max, y_min, y_max, nx, ny, eps: float = DEFAULT_EPS_VALUE,
         threads: int = 1, done: list | None = None, on_row=None) -> list[LocusSample]:
    """Row-major samples (y outer, x inner). `done` holds rows already computed by a previous run."""
    xs, ys = scan_axes(x_min, x_max, y_min, y_max, nx, ny)
    # one lattice bound per scan, from the smallest y (terms decay faster for larger y)
    M = lattice_bound(float(y_min), eps)
    samples = list(done or [])
    start = len(samples) // nx
    samples = samples[:start * nx]
    todo = list(ys[start:])
    if start:
        log.info(f"[locus_g1] resuming at row {start + 1}/{ny}")

    bar = tqdm(total=ny, initial=start, desc="[locus_g1] scan", unit="row",
               disable=not sys.stderr.isatty())
    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for row in pool.map(lambda y: scan_row(xs, y, eps, M), todo):
                samples.extend(row)
                bar.update(1)
                if on_row is not None:
                    on_row(samples, M)
    else:
        for y in todo:
            samples.extend(scan_row(xs, y, eps, M))
            bar.update(1)
            if on_row is not None:
                on_row(samples, M)
    bar.close()
    return samples


def sample_from_row(row: dict) -> LocusSample:
    return LocusSample(x=float(row["x"]), y=float(row["y"]), w=float(row["w"]),
                       w_x=float(row["wx"]), w_y=float(row["wy"]), r1=float(row["r1"]),
                       r2=float(row["r2"]), res=float(row["res"]), err=row.get("err") or "")


def scan_minimum(samples: list[LocusSample]) -> LocusSample:
    valid = [s for s in samples if not math.isnan(s.res)]
    return min(valid, key=lambda s: s.res)


# ---------------------------------------------------------------------------
# Newton refinement
# ---------------------------------------------------------------------------
def jacobian(j: WJet) -> np.ndarray:
    """∂(r1, r2)/∂(x, y) for r1 = w_x, r2 = 2y·w_y + w."""
    return np.array([[j.w_xx, j.w_xy],
                     [2.0 * j.y * j.w_xy + j.w_x, 3.0 * j.w_y + 2.0 * j.y * j.w_yy]])


def refine(x0: float, y0: float, eps: float = DEFAULT_EPS_VALUE, max_iter: int = 50,
           damping: float = 1.0, max_halvings: int = 30) -> RefineResult:
    if not y0 > 0.0:
        raise InputError(f"seed y must be positive, got {y0!r}")
    x, y = float(x0), float(y0)
    current = residuals(x, y, eps)
    for it in range(max_iter + 1):
        if current.res < CONVERGED_RES:
            return RefineResult(sample=current, iterations=it)
        if it == max_iter:
            break
        J = jacobian(w_jet(x, y, eps))
        cond = np.linalg.cond(J)
        if not cond < MAX_CONDITION:
            raise SingularJacobian(f"Jacobian condition {cond:.3g} at (x, y) = ({x!r}, {y!r})")
        step = -scipy.linalg.solve(J, np.array([current.r1, current.r2]))

        lam = damping
        for _ in range(max_halvings):
            nx_, ny_ = x + lam * step[0], y + lam * step[1]
            if ny_ > 0.0:
                trial = residuals(nx_, ny_, eps)
                if trial.res < current.res:
                    break
            lam *= 0.5
        else:
            raise NoConvergence(f"no decrease along the Newton direction at ({x!r}, {y!r}), "
                                f"res={current.res:.3g}")
        x, y, current = nx_, ny_, trial
        log.debug(f"[locus_g1] iter {it + 1}: ({x!r}, {y!r}) res={current.res:.3g} step={lam:g}")
    raise NoConvergence(f"res={current.res:.3g} after {max_iter} iterations from ({x0!r}, {y0!r})")


def refine_many(seeds, eps: float = DEFAULT_EPS_VALUE, max_iter: int = 50, damping: float = 1.0,
                cluster_radius: float = 1e-6, threads: int = 1) -> list[dict]:
    """Refine every seed; converged roots within cluster_radius of an earlier root are merged."""
    def one(seed):
        try:
            return seed, refine(seed[0], seed[1], eps, max_iter, damping), None
        except ThetaBidiffError as e:
            return seed, None, e

    roots: list[dict] = []
    failures: list[dict] = []
    for seed, result, err in ordered_map(one, list(seeds), threads):
        if err is not None:
            failures.append({"seed": list(seed), "error": err.name, "message": err.message})
            continue
        s = result.sample
        for root in roots:
            if math.hypot(root["x"] - s.x, root["y"] - s.y) < cluster_radius:
                root["seeds"].append(list(seed))
                break
        else:
            roots.append({"x": s.x, "y": s.y, "res": s.res, "iters": result.iterations,
                          "seeds": [list(seed)]})
    return roots + failures


def annulus_min_residual(x0: float, y0: float, r_inner: float = 0.02, r_outer: float = 0.2,
                         n_radial: int = 10, n_angular: int = 36, eps: float = DEFAULT_EPS_VALUE) -> float:
    """Minimum res over an annulus around (x0, y0); bounded away from 0 when the root is isolated."""
    if not 0.0 < r_inner < r_outer < y0:
        raise InputError(f"need 0 < r_inner < r_outer < y0, got {r_inner!r}, {r_outer!r}, {y0!r}")
    best = math.inf
    for r in np.linspace(r_inner, r_outer, n_radial):
        for phi in np.arange(n_angular) * (2.0 * math.pi / n_angular):
            best = min(best, residuals(x0 + r * math.cos(phi), y0 + r * math.sin(phi), eps).res)
    return best


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def _floats(text: str, count: int, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as e:
        raise InputError(f"cannot parse {what} {text!r}: {e}")
    if len(vals) != count:
        raise InputError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def register_commands(subparsers):
    p = subparsers.add_parser("locus", help="Genus-1 coincidence locus")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scan", help="Grid scan of the residuals (CSV)")
    sc.add_argument("--window", required=True, help="xmin,xmax,ymin,ymax")
    sc.add_argument("--grid", required=True, help="nx,ny")
    sc.add_argument("--out", required=True, help="CSV output (also the resume state)")
    sc.add_argument("--resume", action="store_true", help="Skip rows already present in --out")
    sc.set_defaults(handler=handle)

    rf = sub.add_parser("refine", help="Damped Newton refinement from one or more seeds")
    rf.add_argument("--seed", action="append", required=True, dest="seeds", help="x,y (repeatable)")
    rf.add_argument("--max-iter", type=int, default=50)
    rf.add_argument("--damping", type=float, default=1.0)
    rf.add_argument("--out", default=None)
    rf.set_defaults(handler=handle)

    iso = sub.add_parser("isolation", help="Minimum residual on an annulus around a point")
    iso.add_argument("--center", required=True, help="x,y")
    iso.add_argument("--inner", type=float, default=0.02)
    iso.add_argument("--outer", type=float, default=0.2)
    iso.add_argument("--out", default=None)
    iso.set_defaults(handler=handle)


def _scan_meta(window, grid, eps, M, seed) -> dict:
    return {"eps": eps, "lattice_bound": M, "seed": seed, "lattice_cap": lattice_cap(),
            "window": ",".join(repr(v) for v in window), "grid": f"{grid[0]},{grid[1]}"}


def _load_resume(out: Path, meta_expected: dict) -> list[LocusSample]:
    if not out.exists():
        log.info(f"[locus_g1] {out} not found, starting a fresh scan")
        return []
    meta, rows = read_csv(out)
    for key in ("window", "grid", "eps"):
        if meta.get(key) != meta_expected[key]:
            raise InputError(f"cannot resume {out}: {key} is {meta.get(key)!r}, "
                             f"this run uses {meta_expected[key]!r}")
    return [sample_from_row(r) for r in rows]


def handle(args, config) -> int:
    eps = config.eps_value
    out = Path(args.out) if args.out else None

    if args.command == "scan":
        window = _floats(args.window, 4, "--window")
        try:
            grid = [int(v) for v in args.grid.split(",")]
        except ValueError as e:
            raise InputError(f"cannot parse --grid {args.grid!r}: {e}")
        if len(grid) != 2:
            raise InputError(f"--grid needs nx,ny, got {args.grid!r}")
        scan_axes(*window, *grid)
        M = lattice_bound(window[2], eps)
        meta = _scan_meta(window, grid, repr(eps), M, config.seed)
        done = _load_resume(out, meta) if args.resume else []

        def checkpoint(samples, bound):
            atomic_write_text(out, render_csv(meta, SCAN_COLUMNS, [s.row() for s in samples]))

        log.info(f"[locus_g1] scan {grid[0]}x{grid[1]} window={args.window} M={M}")
        samples = scan(*window, *grid, eps=eps, threads=config.threads, done=done, on_row=checkpoint)
        checkpoint(samples, M)
        best = scan_minimum(samples)
        failed = sum(1 for s in samples if math.isnan(s.res))
        log.info(f"[locus_g1] minimum res={best.res:.3g} at ({best.x!r}, {best.y!r}); {failed} failed samples")
        return 0

    meta = {"eps": eps, "lattice_cap": lattice_cap(), "seed": config.seed}
    if args.command == "refine":
        seeds = [tuple(_floats(s, 2, "--seed")) for s in args.seeds]
        if len(seeds) == 1:
            r = refine(*seeds[0], eps=eps, max_iter=args.max_iter, damping=args.damping)
            result = {"x": r.sample.x, "y": r.sample.y, "res": r.sample.res, "iters": r.iterations}
        else:
            meta["cluster_radius"] = config.cluster_radius
            roots = refine_many(seeds, eps, args.max_iter, args.damping,
                                config.cluster_radius, config.threads)
            emit_table(meta, ["x", "y", "res", "iters", "seeds", "error", "message"], roots, out,
                       config.output_format)
            return 0
        emit_json(meta, result, out)
        return 0

    x0, y0 = _floats(args.center, 2, "--center")
    min_res = annulus_min_residual(x0, y0, args.inner, args.outer, eps=eps)
    emit_json(meta, {"center": [x0, y0], "inner": args.inner, "outer": args.outer,
                     "min_res": min_res}, out)
    return 0


def main():
    from run_config import RunConfig

    parser = argparse.ArgumentParser(description="Genus-1 coincidence locus")
    register_commands(parser.add_subparsers(dest="group", required=True))
    args = parser.parse_args(join_negative_values(["locus"] + sys.argv[1:]))
    try:
        sys.exit(args.handler(args, RunConfig()))
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
