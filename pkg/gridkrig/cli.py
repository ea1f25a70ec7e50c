"""
Command-line entry point
命令行入口 - run / theory / presets

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from gridkrig import __version__
from gridkrig.core.config import settings
from gridkrig.core.exceptions import CellFailure, GridKrigError
from gridkrig.core.logging import setup_logging
from gridkrig.schemas.spectral import CovarianceFamily, Profile
from gridkrig.schemas.theory import ErrorQuery
from gridkrig.services.emitter import emit_results
from gridkrig.services.experiments import PRESETS, apply_overrides, load_config, run_preset
from gridkrig.services.spectral import make_model
from gridkrig.services.theory import as_design, evaluate_query
from gridkrig.utils.resource_monitor import resource_monitor

logger = logging.getLogger(__name__)


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridkrig", description="Interpolation error of GP regression on grids")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="覆盖 GRIDKRIG_LOG_LEVEL")
    parser.add_argument("--log-file", default=None, help="额外写入日志文件")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=_u64, default=None)
    run.add_argument("--replicates", type=_positive_int, default=None)

    theory = sub.add_parser("theory", help="print the theoretical interpolation error")
    theory.add_argument("--family", required=True, choices=[f.value for f in CovarianceFamily])
    theory.add_argument("--theta", required=True, type=float)
    theory.add_argument("--theta-prime", type=float, default=None, help="defaults to --theta")
    theory.add_argument("--family-used", choices=[f.value for f in CovarianceFamily], default=None,
                        help="defaults to --family")
    theory.add_argument("--h", required=True, type=float, action="append", help="grid step; repeatable")
    theory.add_argument("--profile", choices=[p.value for p in Profile], default=settings.DEFAULT_PROFILE)
    theory.add_argument("--form", choices=["exact", "ratio"], default="exact",
                        help="exact mean squared error or ∫F·A")

    sub.add_parser("presets", help="list experiment presets")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), seed=args.seed, replicates=args.replicates,
                             output_dir=args.out)
    results = run_preset(config)
    for path in emit_results(results, config.output_dir):
        print(path)
    resource_monitor.log_snapshot(config.preset.value)
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    true_model = make_model(args.family, args.theta, args.profile)
    used_model = make_model(args.family_used or args.family,
                            args.theta if args.theta_prime is None else args.theta_prime, args.profile)
    values = [
        (h, evaluate_query(ErrorQuery(true_model=true_model, used_model=used_model, design=as_design(h)), args.form))
        for h in args.h
    ]
    if len(values) == 1:
        print(format(values[0][1], ".10g"))
    else:
        for h, value in values:
            print(f"{format(h, '.10g')}\t{format(value, '.10g')}")
    return 0


def _cmd_presets(args: argparse.Namespace) -> int:
    for preset, definition in PRESETS.items():
        print(f"{preset.value}\t{definition.description}")
    return 0


COMMANDS = {"run": _cmd_run, "theory": _cmd_theory, "presets": _cmd_presets}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    try:
        return COMMANDS[args.command](args)
    except CellFailure as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.cause.exit_code if isinstance(e.cause, GridKrigError) else e.exit_code
    except GridKrigError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
