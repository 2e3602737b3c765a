"""Command-line interface.

Commands: validate, run, oracle-check, stats.  Exit codes are stable:
0 success, 1 domain failure (violations, oracle mismatch), 2 usage, parse
or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import run_linearity_suite, run_threshold_suite
from .config import ConfigError, load_network
from .engine import TickSchedule, run
from .events_io import EventFormatError, read_events
from .timing import (
    TimingModel,
    account_throughput,
    estimate_latency,
    load_timing_profile,
    longest_path,
)
from .validate import validate_network

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikesoc",
        description="Functional and timing simulator of an event-driven "
                    "smart vision sensor SoC with spiking convolution cores.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network document against the chip profile")
    p.add_argument("config", help="network document (JSON)")
    p.add_argument("--routes", action="store_true",
                   help="also print the derived route table")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate an event stream through a network")
    p.add_argument("config", help="network document (JSON)")
    p.add_argument("events", help="input event stream (csv or binary)")
    p.add_argument("--trace", metavar="PATH", help="write the full trace (JSON lines)")
    p.add_argument("--ticks-readout", type=int, metavar="N",
                   help="readout tick period in microseconds")
    p.add_argument("--ticks-leak", type=int, metavar="N",
                   help="leak tick period in microseconds")
    p.add_argument("--horizon", type=int, metavar="N",
                   help="tick horizon in microseconds (default: last event)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for unseeded random weight directives")
    p.add_argument("--allow-unsorted", action="store_true",
                   help="stable-sort input events by timestamp")
    p.add_argument("--timing-profile", metavar="PATH",
                   help="timing model JSON overriding the calibrated defaults")
    p.add_argument("--format", choices=["csv", "binary"],
                   help="event file format (default: inferred from suffix)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle-check",
                       help="run the randomized oracle-equivalence suites")
    p.add_argument("--trials", type=int, default=1000,
                   help="linearity trials (thresholded suite runs half as many)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dim", type=int, default=16,
                   help="largest input dimension generated")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("stats", help="aggregate a previously written trace")
    p.add_argument("trace", help="trace file (JSON lines)")
    p.add_argument("--timing-profile", metavar="PATH")
    p.set_defaults(func=cmd_stats)
    return parser


def _load_timing(path: str | None) -> TimingModel:
    if path is None:
        return TimingModel()
    return load_timing_profile(Path(path).read_text(encoding="utf-8"))


def cmd_validate(args: argparse.Namespace) -> int:
    net = load_network(args.config)
    report = validate_network(net)
    print(report)
    if args.routes:
        from .router import build_route_table

        print("route table:")
        print(build_route_table(net).dump())
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_run(args: argparse.Namespace) -> int:
    net = load_network(args.config)
    report = validate_network(net)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_DOMAIN
    timing = _load_timing(args.timing_profile)
    events = read_events(args.events, fmt=args.format,
                         allow_unsorted=args.allow_unsorted)
    ticks = TickSchedule(readout_period_us=args.ticks_readout,
                         leak_period_us=args.ticks_leak,
                         horizon_us=args.horizon)
    result = run(net, events, ticks, collect_trace=bool(args.trace), seed=args.seed)

    for out in result.outputs:
        print(json.dumps({
            "tick": out.tick_index,
            "values": list(out.values),
            "den": out.denominator,
            "flags": [int(f) for f in out.over_threshold],
            "max_class": out.max_class,
        }, sort_keys=True))

    trace = result.trace
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for line in trace.lines():
                fh.write(line + "\n")

    path = longest_path(net)
    latency_ns = estimate_latency(net, timing, path)
    print(f"events in:          {trace.events_in} "
          f"(malformed {trace.malformed}, dropped in preproc {trace.preproc_dropped})")
    print(f"events routed:      {trace.total_emitted()} emitted, "
          f"{trace.total_delivered()} delivered, {trace.faults} faults")
    spikes = sum(s["spikes"] for s in trace.core_stats.values())
    updates = sum(s["updates"] for s in trace.core_stats.values())
    print(f"core activity:      {updates} updates, {spikes} spikes")
    print(f"readout:            {trace.readout_ticks} ticks, "
          f"{trace.readout_dropped} dropped events")
    print(f"estimated latency:  {latency_ns / 1000.0:.2f} us over {' -> '.join(path)}")
    if trace.duration_us > 0 and trace.core_stats:
        updates_per_core = {port: s["updates"] for port, s in trace.core_stats.items()}
        print(account_throughput(updates_per_core, trace.duration_us, timing))
    if args.trace:
        print(f"trace digest:       sha256:{trace.digest()}")
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    threshold_trials = args.trials // 2
    if args.trials <= 0:
        print("no trials")
        return EXIT_OK
    cex = run_linearity_suite(args.trials, args.seed, max_dim=args.max_dim)
    if cex is not None:
        print(str(cex))
        return EXIT_DOMAIN
    print(f"linearity suite:   {args.trials} trials, all exact")
    if threshold_trials > 0:
        cex = run_threshold_suite(threshold_trials, args.seed)
        if cex is not None:
            print(str(cex))
            return EXIT_DOMAIN
        print(f"thresholded suite: {threshold_trials} trials, all exact")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    emitted: dict[str, int] = {}
    delivered: dict[str, int] = {}
    updates: dict[str, int] = {}
    spikes: dict[str, int] = {}
    summary = None
    path = Path(args.trace)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EventFormatError(path, f"bad trace record: {exc.msg}", line=lineno)
            kind = rec.get("kind")
            if kind == "route":
                emitted[rec["src"]] = emitted.get(rec["src"], 0) + 1
                delivered[rec["dst"]] = delivered.get(rec["dst"], 0) + 1
            elif kind in ("core", "leak"):
                port = rec["port"]
                updates[port] = updates.get(port, 0) + rec["updates"]
                spikes[port] = spikes.get(port, 0) + rec["spikes"]
            elif kind == "summary":
                summary = rec
    print("per-port emissions:")
    for port in sorted(emitted):
        print(f"  {port:>8}: {emitted[port]} emitted")
    print("per-port deliveries:")
    for port in sorted(delivered):
        print(f"  {port:>8}: {delivered[port]} delivered")
    print("per-core activity:")
    for port in sorted(updates):
        print(f"  {port:>8}: {updates[port]} updates, {spikes[port]} spikes")
    if summary is not None:
        print(f"summary: {json.dumps(summary, sort_keys=True)}")
        duration = summary.get("duration_us", 0)
        if duration > 0 and updates:
            timing = _load_timing(args.timing_profile)
            print(account_throughput(updates, duration, timing))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EventFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
