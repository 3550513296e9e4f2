"""Deterministic desk-scale verification harness.

Runs the engine against a virtual clock from a script of timestamped
events and logs every outbound note with its ideal and actual time.
Identical script + seed always yields identical log bytes.

Script format, one event per line (blank lines and '#' comments allowed):

    <time_ms> <kind> [args...]

kinds: spec <bars> <numerator> <denominator> | qpm <value> | play | stop |
mode <bass|chords|improv|free> | note_on <pitch> <velocity> |
note_off <pitch> | tap | gate <on|off> | click_mute <on|off> |
drums_derive | drums_generate | end
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .clock import VirtualClock
from .commands import CommandError, apply_command
from .engine import Emission, LooperEngine
from .generator import StubMelodyGenerator


class ScriptError(Exception):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class ScriptEvent:
    time_ms: float
    command: Optional[dict]  # None for 'end'


@dataclass(frozen=True)
class LogEntry:
    actual_ms: float
    instrument: str
    pitch: int
    velocity: int
    ideal_ms: Optional[float]

    def format(self) -> str:
        ideal = "-" if self.ideal_ms is None else f"{self.ideal_ms:.3f}"
        return (
            f"{self.actual_ms:.3f} {self.instrument} {self.pitch} "
            f"{self.velocity} ideal={ideal}"
        )


_NO_ARG = {"play": "play", "stop": "stop", "tap": "tap",
           "drums_derive": "drums_derive", "drums_generate": "drums_generate"}


def parse_script(text: str) -> List[ScriptEvent]:
    events: List[ScriptEvent] = []
    last_time = 0.0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            time_ms = float(parts[0])
        except ValueError:
            raise ScriptError(number, f"bad timestamp {parts[0]!r}")
        if time_ms < last_time:
            raise ScriptError(number, "timestamps must be nondecreasing")
        last_time = time_ms
        if len(parts) < 2:
            raise ScriptError(number, "missing event kind")
        kind, args = parts[1], parts[2:]
        try:
            command = _parse_event(kind, args)
        except (ValueError, IndexError) as exc:
            raise ScriptError(number, f"bad {kind} event: {exc}")
        events.append(ScriptEvent(time_ms=time_ms, command=command))
    return events


def _parse_event(kind: str, args: List[str]) -> Optional[dict]:
    if kind == "end":
        return None
    if kind in _NO_ARG:
        return {"cmd": _NO_ARG[kind]}
    if kind == "spec":
        bars, numerator, denominator = (int(a) for a in args[:3])
        return {"cmd": "spec", "bars": bars, "numerator": numerator,
                "denominator": denominator}
    if kind == "qpm":
        return {"cmd": "qpm", "value": float(args[0])}
    if kind == "mode":
        return {"cmd": "mode", "value": args[0]}
    if kind == "note_on":
        return {"cmd": "note_on", "pitch": int(args[0]), "velocity": int(args[1])}
    if kind == "note_off":
        return {"cmd": "note_off", "pitch": int(args[0])}
    if kind == "gate":
        return {"cmd": "gate", "value": _on_off(args[0])}
    if kind == "click_mute":
        return {"cmd": "click_mute", "value": _on_off(args[0])}
    raise ValueError(f"unknown kind {kind!r}")


def _on_off(token: str) -> bool:
    if token not in ("on", "off"):
        raise ValueError(f"expected on/off, got {token!r}")
    return token == "on"


def run_script(
    text: str,
    seed: Optional[int] = None,
    threshold: int = 16,
    octave_align: bool = False,
    engine: Optional[LooperEngine] = None,
) -> List[LogEntry]:
    """Execute a script against a fresh engine (stub generator, inline
    generation) on a virtual clock."""
    events = parse_script(text)
    clock = VirtualClock()
    if engine is None:
        engine = LooperEngine(
            threshold=threshold,
            seed=seed,
            octave_align=octave_align,
            generator=StubMelodyGenerator(),
            generation="inline",
        )
    log: List[LogEntry] = []

    def record(emissions: List[Emission]) -> None:
        now = clock.now_ms()
        for e in emissions:
            log.append(
                LogEntry(
                    actual_ms=now,
                    instrument=e.note.instrument,
                    pitch=e.note.pitch,
                    velocity=e.note.velocity,
                    ideal_ms=e.ideal_ms,
                )
            )

    def advance_to(target_ms: float) -> None:
        while True:
            deadline = engine.next_deadline_ms()
            if deadline is None or deadline > target_ms:
                break
            clock.sleep_until(deadline)
            record(engine.tick(clock.now_ms()))
        clock.sleep_until(target_ms)

    for event in events:
        advance_to(event.time_ms)
        if event.command is None:
            continue
        try:
            record(apply_command(engine, event.command, clock.now_ms()))
        except CommandError:
            raise
        record(engine.tick(clock.now_ms()))
    return log


def format_log(log: List[LogEntry]) -> str:
    return "\n".join(entry.format() for entry in log) + ("\n" if log else "")
