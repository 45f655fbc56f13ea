"""
Command-line entry point.

    hexafuzz run      [--config FILE] [--out DIR] [--set KEY=VALUE ...]
    hexafuzz compare  [--config FILE] [--controllers pid,g] [--suite] [--sawtooth]
                      [--workers N] [--out DIR] [--set KEY=VALUE ...]
    hexafuzz metrics  --log CSV [--config FILE] [--set KEY=VALUE ...]

Without ``--config`` the ``HEXAFUZZ_CONFIG`` environment variable names the
config file, if set. Exit codes: 0 success, 2 configuration or input error,
3 numerical failure during a simulation.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError
from .compare import compare, compare_suite, table_csv, table_text
from .config import CONTROLLERS, build_config, load_config
from .metrics import METRIC_FIELDS, check_log_matches, compute_metrics
from .runner import read_log, run_sim, save_run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_OUT = "runs"


def _overrides(pairs):
    settings = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        settings[key.strip()] = value.strip()
    return settings


def _config(args):
    cfg = load_config(args.config)
    extra = _overrides(args.set)
    return build_config(extra, cfg) if extra else cfg


def _out_dir(args, cfg):
    return Path(args.out or cfg.output_dir or DEFAULT_OUT)


def _format_metrics(m):
    return "\n".join(f"{f} = {getattr(m, f)}" for f in METRIC_FIELDS)


def cmd_run(args):
    cfg = _config(args)
    sim = run_sim(cfg)
    path = save_run(sim, _out_dir(args, cfg), name=f"{cfg.controller}_{cfg.trajectory.kind}")
    print(f"log: {path}")
    if sim.rows:
        print(_format_metrics(compute_metrics(sim, cfg.trajectory)))
    if sim.error:
        print(f"simulation failed: {sim.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _controllers(text):
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    if not names:
        raise ConfigError("--controllers needs at least one name")
    for n in names:
        if n not in CONTROLLERS:
            raise ConfigError(f"unknown controller {n!r}; expected one of {CONTROLLERS}")
    return names


def cmd_compare(args):
    cfg = _config(args)
    names = _controllers(args.controllers)
    if args.suite:
        rows = compare_suite(cfg, names, sawtooth=args.sawtooth, workers=args.workers)
    else:
        rows = compare([replace(cfg, controller=n) for n in names], workers=args.workers)
    print(table_text(rows), end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(table_csv(rows))
        print(f"table: {out / 'compare.csv'}")
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"{r.trajectory}/{r.controller} failed: {r.error}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_metrics(args):
    cfg = _config(args)
    try:
        with open(args.log, newline="") as fh:
            sim = read_log(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read log {args.log}: {exc}") from exc
    except (ValueError, StopIteration) as exc:
        raise ConfigError(f"malformed log {args.log}: {exc}") from exc
    if not sim.rows:
        raise ConfigError(f"log {args.log} has no rows")
    if not check_log_matches(sim, cfg.trajectory):
        raise ConfigError("the log's z_ref does not match the configured trajectory; "
                          "pass the config the run used")
    print(_format_metrics(compute_metrics(sim, cfg.trajectory)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hexafuzz", description="Hexacopter altitude-control simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (default: $HEXAFUZZ_CONFIG, else shipped defaults)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config setting; repeatable")

    p = sub.add_parser("run", help="simulate one configuration and write its logs")
    common(p)
    p.add_argument("--out", help=f"output directory (default: output_dir or ./{DEFAULT_OUT})")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="matched runs of several controllers, one metrics row each")
    common(p)
    p.add_argument("--controllers", default="pid,g", help="comma-separated controller names")
    p.add_argument("--suite", action="store_true",
                   help="run the four-trajectory suite instead of the configured trajectory")
    p.add_argument("--sawtooth", action="store_true", help="suite uses sawtooth instead of triangle")
    p.add_argument("--workers", type=int, default=1, help="parallel simulation processes")
    p.add_argument("--out", help="also write compare.csv into this directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("metrics", help="recompute metrics from a run CSV")
    common(p)
    p.add_argument("--log", required=True, help="run CSV written by 'run'")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
