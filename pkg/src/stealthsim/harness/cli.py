"""Command-line entry point: ``stealthsim {run,metrics,validate-trace,taxonomy}``.

Exit status: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import __version__
from ..errors import ConfigError, StealthError
from ..metrics import MetricsReport
from ..simkit.eventlog import FORMATS
from ..simkit.trace import load_trace
from ..taxonomy import build_default_taxonomy, load_taxonomy, similarity_table
from .experiment import SYNTHETIC, parse_config_text, read_logs, run_experiment, spec_from_mapping, write_report
from .scenario import LOG_LEVELS, SKILL_MODES

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# CLI dest -> config key
_RUN_FLAGS = {
    "scenario": "scenario", "trace": "trace", "seed": "seed", "reps": "reps", "nodes": "nodes",
    "duration": "duration", "radius": "radius", "announce_interval": "announce_interval",
    "ack_timeout": "ack_timeout", "format": "format", "log_level": "log_level",
    "skill_assignment": "skill_assignment", "trace_seed": "trace_seed", "emergency_time": "emergency_time",
    "focal": "focal_nodes", "receiver": "receiver", "priorities": "priorities", "workers": "workers",
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stealthsim", description="Trust-based emergency alerting simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run seeded repetitions of a scenario")
    r.add_argument("--config", type=Path, help="key=value file; flags given on the command line win")
    r.add_argument("--scenario", choices=["senack", "seack", "meack"])
    src = r.add_mutually_exclusive_group()
    src.add_argument("--trace", help="mobility trace CSV (t,node,x,y)")
    src.add_argument("--synthetic", action="store_true", help="random-waypoint trace (default)")
    r.add_argument("--seed", type=int)
    r.add_argument("--trace-seed", type=int, help="seed of the synthetic trace (default: --seed)")
    r.add_argument("--reps", type=int)
    r.add_argument("--nodes", type=int)
    r.add_argument("--duration", type=float, help="s")
    r.add_argument("--emergency-time", type=float, help="s")
    r.add_argument("--focal", help="focal node ids, e.g. 3,7,11")
    r.add_argument("--receiver", help="designated receiver id (meack)")
    r.add_argument("--priorities", help="id:prio pairs, e.g. 3:2|7:1|11:3")
    r.add_argument("--radius", type=float, help="m")
    r.add_argument("--announce-interval", type=float, help="s")
    r.add_argument("--ack-timeout", type=float, help="ms")
    r.add_argument("--skill-assignment", choices=SKILL_MODES)
    r.add_argument("--log-level", choices=LOG_LEVELS)
    r.add_argument("--format", choices=FORMATS)
    r.add_argument("--workers", type=int)
    r.add_argument("--out", type=Path, required=True)

    m = sub.add_parser("metrics", help="recompute the report from stored logs")
    m.add_argument("run_dir", type=Path, help="run directory or its logs/ folder")
    m.add_argument("--out", type=Path, help="write report files here instead of printing")

    v = sub.add_parser("validate-trace", help="check a mobility trace CSV")
    v.add_argument("path", type=Path)
    v.add_argument("--area", help="WxH in metres, e.g. 400x430")

    t = sub.add_parser("taxonomy", help="print skill similarity to the reference skill")
    t.add_argument("--file", type=Path, help="taxonomy TSV (label<TAB>parent)")
    return p


def _cmd_run(args) -> int:
    values: dict = {}
    if args.config is not None:
        try:
            values.update(parse_config_text(args.config.read_text(encoding="utf-8")))
        except ConfigError as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
    for dest, key in _RUN_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            values[key] = val
    if args.synthetic:
        values["trace"] = SYNTHETIC
    try:
        workers = int(values.pop("workers", 1))
        spec = spec_from_mapping(values)
    except (ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    res = run_experiment(spec.config, spec.trace, args.out, workers=workers,
                         trace_seed=spec.trace_seed, log_format=spec.log_format)
    sys.stdout.write(res.report.to_text())
    if res.invalid:
        print(f"{len(res.invalid)} repetition(s) invalid, see manifest", file=sys.stderr)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    logs = read_logs(args.run_dir)
    report = MetricsReport.from_logs(logs)
    if args.out is not None:
        write_report(report, args.out)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def _cmd_validate(args) -> int:
    area = None
    if args.area:
        try:
            w, h = args.area.lower().split("x")
            area = (float(w), float(h))
        except ValueError:
            raise UsageError(f"--area must look like 400x430, got {args.area!r}") from None
    tr = load_trace(args.path, area=area)
    print(f"ok snapshots={tr.n_snapshots} nodes={tr.n_nodes} interval={tr.snapshot_interval} "
          f"end={tr.end_time:.3f} area={tr.area[0]}x{tr.area[1]}")
    return EXIT_OK


def _cmd_taxonomy(args) -> int:
    tax = load_taxonomy(args.file) if args.file else build_default_taxonomy()
    for label, sim in similarity_table(tax):
        print(f"{label}={sim:.3f}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "metrics": _cmd_metrics, "validate-trace": _cmd_validate,
             "taxonomy": _cmd_taxonomy}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"stealthsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StealthError, OSError) as exc:
        print(f"stealthsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
