"""Command-line entry point: ``reachsep run <scenario> --out <dir> [...]``."""

import argparse
import sys

from .pipeline import run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="reachsep",
        description="Ellipsoidal reachable tubes and control-set synthesis "
                    "for pairwise aircraft separation.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario end to end")
    runp.add_argument("scenario", help="path to the scenario JSON file")
    runp.add_argument("--out", required=True, help="output directory for artifacts")
    runp.add_argument("--k", type=float, default=None,
                      help="override the scalarization factor k0")
    runp.add_argument("--method", choices=["scaled", "norm"], default=None,
                      help="override the phase-one method")
    runp.add_argument("--directions", type=int, default=None,
                      help="override the tube direction count")
    runp.add_argument("--quad-steps", type=int, default=None,
                      help="override the quadrature step count")
    runp.add_argument("--grid-step", type=float, default=None,
                      help="override the output grid step in seconds")
    runp.add_argument("--plots", action="store_true", help="also write SVG figures")
    runp.add_argument("--seed", type=int, default=0,
                      help="seed for the Monte Carlo verification")
    runp.add_argument("--verify-mc", type=int, default=0, metavar="N",
                      help="sample N falsification trajectories per aircraft")
    args = parser.parse_args(argv)
    return run(args.scenario, args.out, {
        "k0": args.k,
        "method": args.method,
        "directions": args.directions,
        "quad_steps": args.quad_steps,
        "grid_step": args.grid_step,
        "plots": args.plots,
        "seed": args.seed,
        "verify_mc": args.verify_mc,
    })


if __name__ == "__main__":
    sys.exit(main())
