import argparse
import os
import sys

from utils.logging_setup import configure_logging

# ------------------------------------------------------
# 1. COMMAND LINE
# ------------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(
        prog="willmore-lab",
        description="Constrained Willmore flow simulator and verification lab",
    )
    parser.add_argument("--log-level", default=os.environ.get("WILLMORE_LOG_LEVEL", "INFO"),
                        help="logging level (default: WILLMORE_LOG_LEVEL or INFO)")
    parser.add_argument("--db-url", default=os.environ.get("DATABASE_URL"),
                        help="SQLAlchemy URL of the run ledger (default: DATABASE_URL)")
    parser.add_argument("--progress", action="store_true", help="show a progress bar during runs")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run the flow for one or more experiment configs")
    simulate.add_argument("configs", nargs="+", help="experiment config JSON file(s)")
    simulate.add_argument("--jobs", type=int, default=1, help="number of configs run concurrently")

    validate = sub.add_parser("validate-operators", help="discrete operator convergence and identity checks")
    validate.add_argument("--levels", default=None, help="comma-separated icosphere levels (default 2,3,4)")
    validate.add_argument("--out", default=None, help="report path")

    oracle = sub.add_parser("oracle", help="exact shrinking-sphere table")
    oracle.add_argument("--rho0", type=float, default=1.0)
    oracle.add_argument("--lambda1", type=float, required=True)
    oracle.add_argument("--lambda2", type=float, default=0.0)
    oracle.add_argument("--points", type=int, default=11)

    analyze = sub.add_parser("analyze", help="audit a trajectory CSV")
    analyze.add_argument("trajectory", help="trajectory.csv written by simulate")
    analyze.add_argument("--blowup", default=None, help="snapshot directory for the blowup analysis")
    analyze.add_argument("--theorem-mode", action="store_true", help="also audit ∫|A°|² monotonicity")
    analyze.add_argument("--chi", type=int, default=2, help="Euler characteristic for the ledger check")
    analyze.add_argument("--out", default=None, help="report path")
    return parser


# ------------------------------------------------------
# 2. ROUTING (one module per command, each exposes run(args) -> int)
# ------------------------------------------------------
def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    if args.command == "simulate": from commands.simulate import run
    elif args.command == "validate-operators": from commands.validate_operators import run
    elif args.command == "oracle": from commands.oracle import run
    elif args.command == "analyze": from commands.analyze import run
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
