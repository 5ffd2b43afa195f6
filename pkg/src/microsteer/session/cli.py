"""Command-line interface: run, replay, serve, metrics."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

from .config import ConfigError, load_scenario
from .record import metrics, read_record, replay_check, write_csv
from .loop import run_headless


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--duration", type=float,
                        help="override the scenario duration, seconds")


def _load(args) -> "Scenario":
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration is not None:
        overrides["duration"] = args.duration
    return load_scenario(args.scenario, overrides)


def cmd_run(args) -> int:
    scenario = _load(args)
    report, rows = run_headless(scenario, out_path=args.out,
                                dump_frames_dir=args.dump_frames)
    if args.csv:
        write_csv(rows, args.csv, scenario.cam.scale)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_replay(args) -> int:
    ok, line = replay_check(args.record)
    if ok:
        print("replay: identical")
        return 0
    print(f"replay: MISMATCH at line {line}")
    return 1


def cmd_metrics(args) -> int:
    scenario_dict, rows = read_record(args.record)
    if not rows:
        print("empty record", file=sys.stderr)
        return 1
    eps = 10.0
    if scenario_dict:
        eps = scenario_dict["ctrl"]["arrival_epsilon"]
    report = metrics(rows, arrival_epsilon=eps)
    if args.csv:
        if scenario_dict is None:
            print("record has no header; cannot scale truth for CSV",
                  file=sys.stderr)
            return 1
        write_csv(rows, args.csv, scenario_dict["cam"]["scale"])
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    scenario = _load(args)
    try:
        asyncio.run(serve(scenario, host=args.host, port=args.port,
                          rate=args.rate, record_path=args.out,
                          console_dir=args.console))
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microsteer",
        description="Closed-loop magnetic steering simulator for "
                    "self-propelled microrobots")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scripted scenario headless")
    p.add_argument("scenario", help="scenario config file")
    _add_overrides(p)
    p.add_argument("--out", help="write the run record (JSON lines)")
    p.add_argument("--csv", help="write a CSV export for plotting")
    p.add_argument("--dump-frames", help="directory for per-frame PGM dumps")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-run a record and verify it byte for byte")
    p.add_argument("record", help="record file from run/serve --out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="host a live operator session")
    p.add_argument("scenario", help="scenario config file")
    _add_overrides(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--rate", type=float, default=1.0,
                   help="pace: 1 = real time, 0 = as fast as possible")
    p.add_argument("--out", help="write the run record at session end")
    p.add_argument("--console", help="directory of built console files to serve")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("metrics", help="summarize a recorded run")
    p.add_argument("record")
    p.add_argument("--csv", help="also write the CSV export")
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
