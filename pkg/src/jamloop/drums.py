"""Deterministic drum derivation from a recorded bassline, plus packaging
of the result as a primer for a drum generator.

Three rules: kick on every bar start, snare on every bass onset, hi-hat on
every 8th note (every two 16th indices on the universal 16th grid).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence

from .improv import GeneratorKind, GeneratorRequest, GeneratorResponse
from .model import DRUM_INSTRUMENTS, HIHAT, KICK, SNARE, PlayableNote, TrackKind
from .transport import LoopSpec

# Conventional GM-ish pitches so renderers can map drums to samples.
DRUM_PITCHES = {KICK: 36, SNARE: 38, HIHAT: 42}

HIHAT_PERIOD = 2  # 8th notes on the 16th grid


class DrumSource(enum.Enum):
    DETERMINISTIC = "deterministic"
    GENERATED = "generated"


@dataclass(frozen=True)
class DrumTrack:
    notes: tuple
    source: DrumSource

    def __post_init__(self) -> None:
        for n in self.notes:
            if n.track is not TrackKind.DRUMS or n.instrument not in DRUM_INSTRUMENTS:
                raise ValueError(f"not a drum note: {n}")


def _drum_note(instrument: str, position: int) -> PlayableNote:
    return PlayableNote(
        track=TrackKind.DRUMS,
        pitch=DRUM_PITCHES[instrument],
        instrument=instrument,
        position=position,
        duration_sixteenths=1,
    )


def derive_drums(bass_line: Sequence[PlayableNote], spec: LoopSpec) -> DrumTrack:
    """Apply the three derivation rules to a bassline.

    Duplicate hits of one instrument at one position collapse to one;
    different instruments freely co-occur.
    """
    length = spec.sequence_length_sixteenths
    spb = spec.sixteenths_per_bar
    kicks = [bar * spb for bar in range(spec.num_bars)]
    snares = sorted({n.position for n in bass_line if n.position < length})
    hihats = list(range(0, length, HIHAT_PERIOD))
    notes: List[PlayableNote] = []
    for pos in kicks:
        notes.append(_drum_note(KICK, pos))
    for pos in snares:
        notes.append(_drum_note(SNARE, pos))
    for pos in hihats:
        notes.append(_drum_note(HIHAT, pos))
    notes.sort(key=lambda n: (n.position, n.instrument))
    return DrumTrack(notes=tuple(notes), source=DrumSource.DETERMINISTIC)


def drums_primer(track: DrumTrack, spec: LoopSpec, seed: Optional[int] = None) -> GeneratorRequest:
    """Encode a deterministic drum track as a 16th-quantized polyphonic
    step sequence for a drum generator."""
    if track.source is not DrumSource.DETERMINISTIC:
        raise ValueError("primer must come from the deterministic track")
    length = spec.sequence_length_sixteenths
    by_step: List[set] = [set() for _ in range(length)]
    for n in track.notes:
        if n.position < length:
            by_step[n.position].add(n.instrument)
    steps: List[FrozenSet[str]] = [frozenset(s) for s in by_step]
    return GeneratorRequest(
        kind=GeneratorKind.DRUMS,
        drum_steps=tuple(steps),
        requested_length=length,
        seed=seed,
    )


def install_generated_drums(
    response: GeneratorResponse, spec: LoopSpec, fallback: DrumTrack
) -> DrumTrack:
    """Build the active drum track from a generator response.

    Empty or invalid responses (unknown instrument, out-of-range position)
    leave the deterministic fallback in place.
    """
    if not response.drum_steps:
        return fallback
    length = spec.sequence_length_sixteenths
    if len(response.drum_steps) > length:
        return fallback
    notes: List[PlayableNote] = []
    for pos, hits in enumerate(response.drum_steps):
        if pos >= length:
            return fallback
        for instrument in sorted(hits):
            if instrument not in DRUM_INSTRUMENTS:
                return fallback
            notes.append(_drum_note(instrument, pos))
    return DrumTrack(notes=tuple(notes), source=DrumSource.GENERATED)
