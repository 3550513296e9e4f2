"""Shared domain vocabulary: pitches, grid positions, notes, tracks, modes.

Everything in here is an immutable value type, safe to copy between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

PITCH_MIN = 0
PITCH_MAX = 127

QPM_MIN = 20.0
QPM_MAX = 400.0

VALID_DENOMINATORS = (4, 8, 16)


class TrackKind(enum.Enum):
    CLICK = "click"
    BASS = "bass"
    CHORDS = "chords"
    DRUMS = "drums"


class Mode(enum.Enum):
    BASS = "bass"
    CHORDS = "chords"
    IMPROV = "improv"
    FREE = "free"


# Symbolic instrument tags; the wire-level integer mapping lives in osc.py.
CLICK_1 = "click-1"
CLICK_2 = "click-2"
CLICK_3 = "click-3"
BASS = "bass"
KEYS = "keys"
KICK = "kick"
SNARE = "snare"
HIHAT = "hihat"
CRASH = "crash"

DRUM_INSTRUMENTS = (KICK, SNARE, HIHAT)


def _check_pitch(value: int) -> int:
    if not (PITCH_MIN <= value <= PITCH_MAX):
        raise ValueError(f"pitch {value} outside {PITCH_MIN}..{PITCH_MAX}")
    return value


def _check_velocity(value: int) -> int:
    if not (1 <= value <= 127):
        raise ValueError(f"velocity {value} outside 1..127")
    return value


def transpose(pitch: int, semitones: int) -> int:
    """Shift a pitch, clamping into the MIDI range."""
    return max(PITCH_MIN, min(PITCH_MAX, pitch + semitones))


def pitch_class(pitch: int) -> int:
    return pitch % 12


@dataclass(frozen=True)
class TimeSignature:
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if self.denominator not in VALID_DENOMINATORS:
            raise ValueError(f"denominator must be one of {VALID_DENOMINATORS}")
        if not (1 <= self.numerator <= 16):
            raise ValueError("numerator must be in 1..16")
        if (self.numerator * 16) % self.denominator != 0:
            raise ValueError("bar does not hold a whole number of 16ths")


@dataclass(frozen=True)
class Tempo:
    qpm: float

    def __post_init__(self) -> None:
        if not (QPM_MIN <= self.qpm <= QPM_MAX):
            raise ValueError(f"qpm {self.qpm} outside {QPM_MIN}..{QPM_MAX}")


@dataclass(frozen=True)
class PlayableNote:
    """One schedulable loop event on the 16th-note grid."""

    track: TrackKind
    pitch: int
    instrument: str
    position: int
    duration_sixteenths: int = 1

    def __post_init__(self) -> None:
        _check_pitch(self.pitch)
        if self.position < 0:
            raise ValueError("position must be >= 0")
        if self.duration_sixteenths < 1:
            raise ValueError("duration must be >= 1 sixteenth")


@dataclass(frozen=True)
class LiveNote:
    """An unquantized performer note; carrier of the human rhythm."""

    pitch: int
    velocity: int
    onset_ms: float
    release_ms: Optional[float] = None

    def __post_init__(self) -> None:
        _check_pitch(self.pitch)
        _check_velocity(self.velocity)
        if self.release_ms is not None and self.release_ms <= self.onset_ms:
            raise ValueError("release must follow onset")


@dataclass(frozen=True)
class OutboundNote:
    """A note event headed for the renderer; velocity 0 means note-off."""

    instrument: str
    pitch: int
    velocity: int

    @property
    def is_off(self) -> bool:
        return self.velocity == 0
