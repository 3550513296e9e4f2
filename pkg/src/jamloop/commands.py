"""Single control path shared by every input surface.

OSC CC messages and WebSocket JSON commands both reduce to the same
command dicts and go through apply_command, so any control has identical
effect regardless of where it came from.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from .engine import Emission, EngineError, LooperEngine
from .model import Mode

# Default CC assignments (Nanokontrol-style button rows); override via config.
DEFAULT_CC_MAP: Dict[int, str] = {
    41: "play",
    42: "stop",
    44: "tap",
    45: "click_mute",
    46: "drums_derive",
    47: "drums_generate",
    64: "gate",
    71: "mode_bass",
    72: "mode_chords",
    73: "mode_improv",
    74: "mode_free",
}


class CommandError(Exception):
    pass


def cc_to_command(controller: int, value: int,
                  cc_map: Optional[Dict[int, str]] = None) -> Optional[dict]:
    """Translate a CC event to a command dict; None for unmapped CCs or
    button releases."""
    name = (cc_map or DEFAULT_CC_MAP).get(controller)
    if name is None:
        return None
    if name == "gate":
        return {"cmd": "gate", "value": value >= 64}
    if name == "click_mute":
        return {"cmd": "click_mute", "value": value >= 64}
    if value == 0:
        return None  # button release
    if name.startswith("mode_"):
        return {"cmd": "mode", "value": name[len("mode_"):]}
    return {"cmd": name}


def apply_command(engine: LooperEngine, cmd: dict, now_ms: float) -> List[Emission]:
    """Apply one command; raises CommandError on malformed or rejected
    input.  Returns any emissions the command produced."""
    try:
        name = cmd["cmd"]
    except (TypeError, KeyError):
        raise CommandError("missing 'cmd' field")
    try:
        if name == "play":
            engine.start(now_ms)
            return []
        if name == "stop":
            return engine.stop()
        if name == "tap":
            engine.tap(now_ms)
            return []
        if name == "qpm":
            engine.set_qpm(float(cmd["value"]))
            return []
        if name == "spec":
            engine.set_loop_spec(
                int(cmd["bars"]), int(cmd["numerator"]), int(cmd["denominator"])
            )
            return []
        if name == "mode":
            engine.set_mode(Mode(cmd["value"]))
            return []
        if name == "gate":
            engine.set_gate(bool(cmd["value"]))
            return []
        if name == "click_mute":
            engine.set_click_muted(bool(cmd["value"]))
            return []
        if name == "drums_derive":
            engine.derive_drums_now()
            return []
        if name == "drums_generate":
            engine.request_drum_generation()
            return []
        if name == "note_on":
            return engine.note_on(int(cmd["pitch"]), int(cmd["velocity"]), now_ms)
        if name == "note_off":
            return engine.note_off(int(cmd["pitch"]), now_ms)
    except (EngineError, ValueError, KeyError) as exc:
        raise CommandError(str(exc)) from exc
    raise CommandError(f"unknown command {name!r}")
