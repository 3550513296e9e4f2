"""Command-line entry point.

Flags mirror EngineConfig one-to-one; every flag can also be set through
a JAMLOOP_* environment variable (e.g. JAMLOOP_QPM=140).  With
--simulate the engine runs a script against a virtual clock and prints
the event log instead of starting the daemon.
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
from typing import Optional, Tuple

from .daemon import Daemon, EngineConfig
from .simulate import ScriptError, format_log, run_script

ENV_PREFIX = "JAMLOOP_"

log = logging.getLogger(__name__)


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _endpoint(text: str) -> Tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host:
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamloop",
        description="Real-time looper and hybrid-improvisation engine.",
    )
    parser.add_argument("--bars", type=int, default=int(_env("bars", 2)))
    parser.add_argument(
        "--ts", default=_env("ts", "4/4"),
        help="time signature, e.g. 4/4, 6/8, 7/4",
    )
    parser.add_argument("--qpm", type=float, default=float(_env("qpm", 120.0)))
    parser.add_argument(
        "--osc-listen", type=_endpoint,
        default=_endpoint(_env("osc_listen", "127.0.0.1:57120")),
    )
    parser.add_argument(
        "--osc-send", type=_endpoint,
        default=_endpoint(_env("osc_send", "127.0.0.1:57110")),
    )
    parser.add_argument("--ws-port", type=int, default=int(_env("ws_port", 8765)))
    parser.add_argument(
        "--generator", default=_env("generator", "stub"),
        help="'stub' or 'remote'",
    )
    parser.add_argument(
        "--generator-endpoint", type=_endpoint,
        default=None, help="host:port of a remote generator",
    )
    parser.add_argument("--seed", type=int,
                        default=(lambda v: int(v) if v is not None else None)(_env("seed", None)))
    parser.add_argument("--threshold", type=int, default=int(_env("threshold", 16)))
    parser.add_argument("--octave-align", action="store_true",
                        default=_env("octave_align", "") == "1")
    parser.add_argument("--gate-cc", type=int, default=None)
    parser.add_argument("--log-level", default=_env("log_level", "INFO"))
    parser.add_argument("--simulate", metavar="SCRIPT",
                        help="run a simulation script and print the event log")
    return parser


def config_from_args(args: argparse.Namespace) -> EngineConfig:
    try:
        numerator, denominator = (int(p) for p in args.ts.split("/"))
    except ValueError:
        raise SystemExit(f"invalid time signature {args.ts!r}")
    return EngineConfig(
        bars=args.bars,
        numerator=numerator,
        denominator=denominator,
        qpm=args.qpm,
        osc_listen=args.osc_listen,
        osc_send=args.osc_send,
        ws_port=args.ws_port,
        generator=args.generator,
        generator_endpoint=args.generator_endpoint,
        seed=args.seed,
        threshold=args.threshold,
        octave_align=args.octave_align,
        gate_cc=args.gate_cc,
        log_level=args.log_level,
    )


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    if args.simulate:
        try:
            with open(args.simulate) as handle:
                text = handle.read()
        except OSError as exc:
            print(f"cannot read script: {exc}", file=sys.stderr)
            return 1
        try:
            entries = run_script(
                text,
                seed=args.seed,
                threshold=args.threshold,
                octave_align=args.octave_align,
            )
        except ScriptError as exc:
            print(f"script error: {exc}", file=sys.stderr)
            return 1
        sys.stdout.write(format_log(entries))
        return 0

    config = config_from_args(args)
    try:
        daemon = Daemon(config)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1

    def _signal_handler(signum, frame):
        daemon.request_stop()

    signal.signal(signal.SIGTERM, _signal_handler)
    signal.signal(signal.SIGINT, _signal_handler)
    try:
        daemon.run_forever()
    except OSError as exc:
        print(f"startup failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
