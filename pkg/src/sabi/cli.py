"""Command-line driver.

    sabi run <config.json>          integrate and write outputs
    sabi verify <suite> [options]   run a named acceptance suite
    sabi resume <checkpoint.npz>    continue a checkpointed member

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 acceptance failure.
The SABI_OUTPUT_ROOT environment variable relocates all output trees.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .errors import ConfigError, NumericalError, SabiError
from .runner import resume_member, run_ensemble

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _output_root(args_root: str | None) -> str | None:
    return args_root or os.environ.get("SABI_OUTPUT_ROOT")


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_ensemble(config, output_root=_output_root(args.output_root))
    last = result.members[-1].records[-1]
    print(
        f"completed {config.model}: {config.ensemble.members} member(s), "
        f"{config.integrator.n_steps} steps, final energy {last.energy:.9g}"
    )
    if result.output_dir is not None:
        print(f"outputs in {result.output_dir}")
    return EXIT_OK


def cmd_resume(args: argparse.Namespace) -> int:
    result = resume_member(args.checkpoint, output_root=_output_root(args.output_root))
    if result.records:
        print(
            f"resumed member {result.member}: final energy {result.records[-1].energy:.9g}"
        )
    else:
        print(f"resumed member {result.member}: checkpoint was already at the final step")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from . import verify

    overrides = {}
    if args.grid is not None:
        overrides["grid_n"] = args.grid
    if args.dt is not None:
        overrides["dt"] = args.dt
    reports = verify.run_suites(args.suite, **overrides)
    ok = all(r.passed for r in reports)
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sabi",
        description="spectral field-equation simulator with stochastic Lie transport",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured run")
    p_run.add_argument("config", help="path to a JSON run configuration")
    p_run.add_argument("--output-root", default=None, help="root for output trees")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run a named acceptance suite")
    p_verify.add_argument("suite", help="suite name or 'all'")
    p_verify.add_argument("--grid", type=int, default=None, help="override grid size")
    p_verify.add_argument("--dt", type=float, default=None, help="override time step")
    p_verify.set_defaults(func=cmd_verify)

    p_resume = sub.add_parser("resume", help="continue from a checkpoint")
    p_resume.add_argument("checkpoint", help="path to a checkpoint .npz")
    p_resume.add_argument("--output-root", default=None, help="root for output trees")
    p_resume.set_defaults(func=cmd_resume)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SabiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
