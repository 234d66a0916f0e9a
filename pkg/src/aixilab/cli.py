"""Command-line entry points: run, experiment, enumerate-class, pool-build."""

from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .bestvote import build_pool, save_pool_manifest
from .core import parse_horizon
from .envs import build_mu
from .plotting import render_report_figures, write_report_csv, write_report_summary
from .semimeasure import TransducerClass


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="aixilab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one agent/environment interaction")
    p_run.add_argument("--config", required=True, help="flat key = value config file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    p_exp = sub.add_parser("experiment", help="run a named experiment")
    p_exp.add_argument("name", help="registry name, or 'all'")
    p_exp.add_argument("--out", default="", help="output directory (AIXI_LAB_OUT overrides)")
    p_exp.add_argument("--no-figures", action="store_true")

    p_enum = sub.add_parser("enumerate-class", help="write a transducer-class manifest")
    p_enum.add_argument("--max-len", type=int, required=True)
    p_enum.add_argument("--out", required=True)
    p_enum.add_argument("--env", default="heavenhell:1", help="environment fixing the alphabet")

    p_pool = sub.add_parser("pool-build", help="write a best-vote pool manifest")
    p_pool.add_argument("--lbits", type=int, required=True)
    p_pool.add_argument("--tsteps", type=int, required=True)
    p_pool.add_argument("--out", required=True)
    p_pool.add_argument("--env", default="heavenhell:1", help="environment fixing the alphabet")
    p_pool.add_argument("--class-max-len", type=int, default=11)

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "experiment":
        return _cmd_experiment(args)
    if args.command == "enumerate-class":
        return _cmd_enumerate(args)
    if args.command == "pool-build":
        return _cmd_pool(args)
    parser.error("unknown command")
    return 2


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        config = harness.parse_config(fh.read(), args.overrides)
    log = harness.run(config)
    outdir = harness.output_dir(config.out)
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"run_{config.agent.replace(':', '-')}_{config.seed}.csv")
    with open(path, "w") as fh:
        fh.write(log.to_csv())
    print(f"wrote {path} (total credit {log.total_credit()})")
    if "aborted" in log.header:
        print(f"aborted: {log.header['aborted']}", file=sys.stderr)
        return 1
    return 0


def _cmd_experiment(args) -> int:
    names = sorted(harness.EXPERIMENTS) if args.name == "all" else [args.name]
    outdir = harness.output_dir(args.out)
    all_passed = True
    for name in names:
        report = harness.experiment(name)
        all_passed = all_passed and report.passed
        print(report.summary())
        csv_path = write_report_csv(report, outdir)
        write_report_summary(report, outdir)
        figures = [] if args.no_figures else render_report_figures(report, outdir)
        print(f"wrote {csv_path}" + (f" and {len(figures)} figure(s)" if figures else ""))
    return 0 if all_passed else 1


def _cmd_enumerate(args) -> int:
    env = build_mu(harness.parse_env_spec(args.env))
    cls = TransducerClass.enumerate(env.alphabet, args.max_len)
    cls.save_manifest(args.out)
    print(f"wrote {args.out}: {len(cls.programs)} transducers, prior mass {cls.total_weight()}")
    return 0


def _cmd_pool(args) -> int:
    env = build_mu(harness.parse_env_spec(args.env))
    clamp = TransducerClass.enumerate(env.alphabet, args.class_max_len)
    pool = build_pool(args.lbits, args.tsteps, clamp, parse_horizon("lifetime"), 1, env.alphabet)
    save_pool_manifest(pool, args.out)
    print(f"wrote {args.out}: {len(pool.members)} programs ({pool.setup_strings_examined} strings examined)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
