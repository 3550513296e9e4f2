"""Pure timing mathematics: grid geometry, tempo conversion, tap tempo,
click-track generation, and quantization.

All functions are side-effect free and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .model import (
    CLICK_1,
    CLICK_2,
    CLICK_3,
    QPM_MAX,
    QPM_MIN,
    PlayableNote,
    Tempo,
    TimeSignature,
    TrackKind,
)

# Pitches carried by the click sounds; renderers key off the instrument tag,
# the pitch just distinguishes the sample bank slot.
CLICK_PITCHES = {CLICK_1: 76, CLICK_2: 77, CLICK_3: 78}
CLICK_VELOCITY = 100

TAP_WINDOW_MS = 3000.0


@dataclass(frozen=True)
class LoopSpec:
    num_bars: int
    time_signature: TimeSignature
    tempo: Tempo

    def __post_init__(self) -> None:
        if self.num_bars < 1:
            raise ValueError("num_bars must be >= 1")

    @property
    def sixteenths_per_bar(self) -> int:
        return sixteenths_per_bar(self.time_signature)

    @property
    def sequence_length_sixteenths(self) -> int:
        return self.num_bars * self.sixteenths_per_bar

    @property
    def sixteenth_ms(self) -> float:
        return sixteenth_duration_ms(self.tempo)

    @property
    def loop_duration_ms(self) -> float:
        return self.sequence_length_sixteenths * self.sixteenth_ms

    def with_tempo(self, tempo: Tempo) -> "LoopSpec":
        return LoopSpec(self.num_bars, self.time_signature, tempo)


def sixteenths_per_bar(ts: TimeSignature) -> int:
    spb, rem = divmod(ts.numerator * 16, ts.denominator)
    if rem:
        raise ValueError("bar does not hold a whole number of 16ths")
    return spb


def sixteenth_duration_ms(tempo: Tempo) -> float:
    # One quarter note spans four 16ths.
    return 60000.0 / (tempo.qpm * 4.0)


def click_period(ts: TimeSignature) -> int:
    """Spacing of the subdivision click in 16ths: 4, 2, or 1 depending on
    the denominator."""
    return 16 // ts.denominator


def tap_tempo(tap_timestamps_ms: Sequence[float]) -> Optional[Tempo]:
    """Estimate tempo from tap times; gaps over 3 s reset the window.

    Returns None when fewer than two usable taps remain (no-change signal).
    """
    usable: List[float] = []
    for t in tap_timestamps_ms:
        if usable and t - usable[-1] > TAP_WINDOW_MS:
            usable = []
        usable.append(t)
    if len(usable) < 2:
        return None
    intervals = [b - a for a, b in zip(usable, usable[1:])]
    mean = sum(intervals) / len(intervals)
    if mean <= 0:
        return None
    qpm = 60000.0 / mean
    return Tempo(max(QPM_MIN, min(QPM_MAX, qpm)))


def click_events(spec: LoopSpec) -> List[PlayableNote]:
    """Generate the three-sound click track for a loop.

    Sound 1 marks the sequence start, sound 2 the remaining bar starts,
    sound 3 the denominator-dependent subdivision.  Bar-start sounds take
    priority: at most one click per grid position.
    """
    spb = spec.sixteenths_per_bar
    period = click_period(spec.time_signature)
    bar_starts = {bar * spb for bar in range(spec.num_bars)}
    events = [_click(CLICK_1, 0)]
    events.extend(_click(CLICK_2, pos) for pos in sorted(bar_starts - {0}))
    for pos in range(0, spec.sequence_length_sixteenths, period):
        if pos not in bar_starts:
            events.append(_click(CLICK_3, pos))
    events.sort(key=lambda n: n.position)
    return events


def _click(instrument: str, position: int) -> PlayableNote:
    return PlayableNote(
        track=TrackKind.CLICK,
        pitch=CLICK_PITCHES[instrument],
        instrument=instrument,
        position=position,
        duration_sixteenths=1,
    )


def position_at(elapsed_ms: float, spec: LoopSpec) -> Tuple[int, float]:
    """Grid index and fractional phase for a time offset from loop start."""
    steps = elapsed_ms / spec.sixteenth_ms
    index = int(math.floor(steps))
    phase = steps - index
    return index % spec.sequence_length_sixteenths, phase


def quantize(onset_ms: float, spec: LoopSpec) -> int:
    """Snap an onset to the nearest grid index (half rounds up), modulo the
    sequence length."""
    step = math.floor(onset_ms / spec.sixteenth_ms + 0.5)
    return step % spec.sequence_length_sixteenths
