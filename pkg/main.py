#!/usr/bin/env python3
"""
thetabidiff command-line front end
Usage: python3 main.py [global options] <group> <command> [options]

Command groups:
  theta   - θ(z;τ) and θ[ζ](z;τ) with jets
  sot     - second-order theta functions, Gram matrix (g = 1)
  bidiff  - σ / η correction matrices, V₀₀ rank, Gunning identity
  locus   - genus-1 coincidence locus scan / refine / isolation
  fay     - genus-1 trisecant identity, A₁₂/B₁₂, periods of Ω
  verify  - every identity and property suite, deterministic report

Exit status: 0 on success, 2 on usage or input errors, 1 on numerical
errors (and from `verify` when any check fails).
"""
import argparse
import logging
import sys
import time
from pathlib import Path

import bidiff
import fay_check
import locus_g1
import sot
import theta_engine
import verify
from errors import ThetaBidiffError
from run_config import load_config
from siegel_core import join_negative_values

try:
    import colorlog
except ImportError:
    colorlog = None

# Command groups: (group, module, description)
GROUPS = [
    ("theta",  theta_engine, "Theta functions with characteristics"),
    ("sot",    sot,          "Second-order theta functions"),
    ("bidiff", bidiff,       "Bidifferential correction matrices"),
    ("locus",  locus_g1,     "Genus-1 coincidence locus"),
    ("fay",    fay_check,    "Trisecant identity and Ω"),
    ("verify", verify,       "Verification suite"),
]

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"


def setup_logging(output_dir: Path | None = None, verbose: bool = False) -> logging.Logger:
    stream = logging.StreamHandler(sys.stderr)
    if colorlog is not None:
        stream.setFormatter(colorlog.ColoredFormatter("%(log_color)s" + LOG_FORMAT))
    else:
        stream.setFormatter(logging.Formatter(LOG_FORMAT))
    handlers = [stream]
    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(output_dir / "thetabidiff.log", encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handlers.append(file_handler)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        handlers=handlers, force=True)
    return logging.getLogger("thetabidiff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thetabidiff",
        description="Theta functions, bidifferential corrections and the genus-1 coincidence locus",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--config",  default=None, help="RunConfig JSON file")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (overrides THETA_BIDIFF_THREADS)")
    parser.add_argument("--seed",    type=int, default=None, help="Seed for randomized points")
    parser.add_argument("--eps",     type=float, default=None, help="Value tolerance eps_value")
    parser.add_argument("--format",  choices=["csv", "json"], default=None, dest="output_format",
                        help="Output format where a command supports both")
    parser.add_argument("--log-dir", default=None, help="Also write thetabidiff.log here")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    groups = parser.add_subparsers(dest="group", required=True, metavar="<group>")
    for _, module, _ in GROUPS:
        module.register_commands(groups)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(join_negative_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    log = setup_logging(Path(args.log_dir) if args.log_dir else None, args.verbose)
    try:
        config = load_config(Path(args.config) if args.config else None,
                             threads=args.threads, seed=args.seed, eps_value=args.eps,
                             output_format=args.output_format)
        theta_engine.configure(lattice_cap=config.lattice_cap)
        start = time.time()
        log.info(f"[thetabidiff] {args.group} {getattr(args, 'command', '')} "
                 f"(seed={config.seed}, threads={config.threads}, eps={config.eps_value:g})")
        status = args.handler(args, config)
        log.info(f"[thetabidiff] {args.group} finished in {time.time() - start:.2f}s")
        return status
    except ThetaBidiffError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"error: InputError: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
