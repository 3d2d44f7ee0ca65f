"""
polymart: moment and tail bounds for polynomial martingales, and the Monte
Carlo harness that checks them.

    python main.py constants
    python main.py verify --config exp.json --out report.csv
    python main.py tail --d 2 --q 1 --r 0 --x-grid 1e4 1e7 40
"""
import argparse
import sys

import bounds
import config
import simulation
from errors import ConfigError
from reports import load_json, reports


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="CSV output path (stdout when omitted)")
    common.add_argument("--seed", type=int, help=f"master seed (default {config.RANDOM_SEED})")
    profile = common.add_mutually_exclusive_group()
    profile.add_argument("--quick", dest="profile", action="store_const", const="quick",
                         help=f"{config.QUICK_PATHS:,} paths per run")
    profile.add_argument("--full", dest="profile", action="store_const", const="full",
                         help=f"{config.FULL_PATHS:,} paths per run")
    common.add_argument("--no-header-timestamp", dest="timestamp", action="store_false",
                        default=None, help="omit the '# generated' CSV line")
    common.add_argument("--quiet", action="store_true", help="no progress logging")

    parser = argparse.ArgumentParser(prog="polymart", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("constants", parents=[common], help="K_Os, K_R and the gamma/kappa tables")
    p.add_argument("--max-d", dest="max_d", type=int)

    p = sub.add_parser("bound", parents=[common], help="V, W and both bounds for a family")
    p.add_argument("--kind", dest="families", nargs="+")
    p.add_argument("--d", dest="d_grid", type=int, nargs="+")
    p.add_argument("--n", dest="n_grid", type=int, nargs="+")
    p.add_argument("--p", dest="p_grid", type=float, nargs="+")

    p = sub.add_parser("verify", parents=[common], help="Monte Carlo check of the moment bounds")
    p.add_argument("--normed", action="store_true", default=None,
                   help="use Q / sqrt(Var Q) and the relative-moment bounds")

    p = sub.add_parser("tail", parents=[common], help="tail exponents and tail domination")
    p.add_argument("--d", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--x-grid", dest="x_grid", type=float, nargs=3, metavar=("MIN", "MAX", "POINTS"))

    sub.add_parser("decompose", parents=[common], help="square-function decomposition for d = 1")

    p = sub.add_parser("poisson-demo", parents=[common], help="centered Poisson norms vs p/(e ln p)")
    p.add_argument("--p", dest="p_grid", type=float, nargs="+")
    return parser


def config_from_args(args):
    """JSON config (if any) overlaid with command-line flags."""
    raw = load_json(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.config}: the experiment config must be a JSON object")
    if raw.setdefault("mode", args.mode) != args.mode:
        raise ConfigError(f"config mode {raw['mode']!r} does not match subcommand {args.mode!r}")

    if args.profile == "quick":
        raw["paths"] = config.QUICK_PATHS
    elif args.profile == "full":
        raw["paths"] = config.FULL_PATHS
    for key in ("seed", "out", "timestamp", "max_d", "families", "d_grid", "n_grid", "p_grid", "normed"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if args.mode == "tail":
        if (args.d is None) != (args.q is None):
            raise ConfigError("tail needs --d and --q together")
        if args.d is not None:
            raw["tail_cases"] = [[args.d, args.q, args.r]]
        if args.x_grid is not None:
            lo, hi, points = args.x_grid
            raw["x_grid"] = {"min": lo, "max": hi, "points": int(points)}
    return simulation.ExperimentConfig.from_dict(raw)


def print_header(cfg):
    reports.banner("POLYMART: moment and tail bounds for polynomial martingales")
    reports.log("setup", f"mode={cfg.mode} seed={cfg.seed} paths={cfg.paths:,} "
                         f"directions={cfg.directions} threads={config.worker_count()}")
    k_os, argmax = bounds.os_constant()
    reports.log("setup", f"K_Os={k_os:.4f} (argmax p={argmax:g})  K_R={config.K_R}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    reports.quiet = args.quiet
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"polymart: config error: {exc}", file=sys.stderr)
        return simulation.EXIT_CONFIG
    print_header(cfg)
    return simulation.run_safely(cfg)


if __name__ == "__main__":
    sys.exit(main())
