"""Call-and-response improvisation: accumulate human pitches, hand them to a
melody generator as a primer, then intercept incoming notes and substitute
generated pitches while leaving the human rhythm untouched.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Tuple

from .model import LiveNote
from .transport import LoopSpec

DEFAULT_THRESHOLD = 16


class GeneratorKind(enum.Enum):
    MELODY = "melody"
    DRUMS = "drums"


@dataclass(frozen=True)
class NoteToken:
    """A (pitch, duration) token, the generator's unit of melody."""

    pitch: int
    duration_sixteenths: int


@dataclass(frozen=True)
class GeneratorRequest:
    kind: GeneratorKind
    primer: Tuple[NoteToken, ...] = ()
    drum_steps: Tuple = ()
    requested_length: int = 1
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.requested_length < 1:
            raise ValueError("requested_length must be >= 1")
        if self.kind is GeneratorKind.MELODY and not self.primer:
            raise ValueError("melody request needs a nonempty primer")


@dataclass(frozen=True)
class GeneratorResponse:
    kind: GeneratorKind
    melody: Tuple[NoteToken, ...] = ()
    drum_steps: Tuple = ()

    @property
    def empty(self) -> bool:
        return not self.melody and not self.drum_steps


class Phase(enum.Enum):
    ACCUMULATING = "accumulating"
    AWAITING_GENERATION = "awaiting_generation"
    REPLACING = "replacing"


def octave_align(generated: List[int], reference: int) -> List[int]:
    """Transpose a generated sequence by whole octaves so its first pitch
    lands near the reference.  Ties prefer the smaller shift, then downward.
    """
    if not generated:
        raise ValueError("generated sequence is empty")
    first = generated[0]
    best = 0
    best_key = (abs(first - reference), 0, 0)
    for octaves in range(-10, 11):
        shift = octaves * 12
        candidate = first + shift
        if not (0 <= candidate <= 127):
            continue
        key = (abs(candidate - reference), abs(shift), shift)
        if key < best_key:
            best_key = key
            best = shift
    return [max(0, min(127, p + best)) for p in generated]


class ImprovMachine:
    """Three-phase pitch substitution machine.

    note_on/note_off run on the timeline thread; generation happens
    elsewhere and arrives via on_response.
    """

    def __init__(self, threshold: int = DEFAULT_THRESHOLD, seed: Optional[int] = None):
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        self.threshold = threshold
        self.seed = seed
        self.phase = Phase.ACCUMULATING
        self.accumulated: List[LiveNote] = []
        self.generated: Deque[int] = deque()
        # Input pitch -> stack of substituted pitches still sounding.  A
        # stack (not a single slot) keeps note-ons and note-offs balanced
        # when the performer retriggers a key before releasing it.
        self.substitution_map: Dict[int, List[int]] = {}
        self.gate_engaged = True
        self.last_input_pitch: Optional[int] = None
        self._request_serial = 0

    def reset(self) -> None:
        """Return to a clean Accumulating state (entering Improv mode)."""
        self.phase = Phase.ACCUMULATING
        self.accumulated.clear()
        self.generated.clear()
        self._request_serial += 1  # invalidates in-flight responses

    def gate(self, engaged: bool) -> None:
        """Footpedal-style bypass: disengaged freezes the phase and passes
        notes through untouched."""
        self.gate_engaged = engaged

    @property
    def queue_depth(self) -> int:
        return len(self.generated)

    def note_on(
        self, note: LiveNote, spec: LoopSpec
    ) -> Tuple[int, Optional[GeneratorRequest]]:
        """Process a performer note-on; returns (output pitch, request?).

        Accumulating: pass through and collect; crossing the threshold
        yields a generator request.  Awaiting: pass through uncollected.
        Replacing: substitute the next generated pitch.
        """
        if not self.gate_engaged:
            return note.pitch, None
        self.last_input_pitch = note.pitch
        if self.phase is Phase.REPLACING:
            out = self.generated.popleft()
            self.substitution_map.setdefault(note.pitch, []).append(out)
            if not self.generated:
                self.phase = Phase.ACCUMULATING
            return out, None
        if self.phase is Phase.AWAITING_GENERATION:
            return note.pitch, None
        self.accumulated.append(note)
        if len(self.accumulated) >= self.threshold:
            request = self._build_request(spec)
            self.accumulated.clear()
            self.phase = Phase.AWAITING_GENERATION
            return note.pitch, request
        return note.pitch, None

    def note_off(self, pitch: int) -> int:
        """Pair a release with its substituted pitch, if any.

        Pairing applies even while the gate is disengaged, so notes
        substituted before the pedal came up still get their note-offs.
        """
        stack = self.substitution_map.get(pitch)
        if not stack:
            return pitch
        out = stack.pop()
        if not stack:
            del self.substitution_map[pitch]
        return out

    def on_response(self, response: GeneratorResponse, serial: Optional[int] = None,
                    align_reference: Optional[int] = None) -> bool:
        """Install generated pitches; returns True if the response was used.

        Stale responses (wrong serial or wrong phase) are discarded; empty
        responses fall back to Accumulating.
        """
        if self.phase is not Phase.AWAITING_GENERATION:
            return False
        if serial is not None and serial != self._request_serial:
            return False
        pitches = [t.pitch for t in response.melody]
        if not pitches:
            self.phase = Phase.ACCUMULATING
            return False
        if align_reference is not None:
            pitches = octave_align(pitches, align_reference)
        self.generated = deque(pitches)
        self.phase = Phase.REPLACING
        return True

    @property
    def request_serial(self) -> int:
        return self._request_serial

    def _build_request(self, spec: LoopSpec) -> GeneratorRequest:
        self._request_serial += 1
        notes = self.accumulated
        step_ms = spec.sixteenth_ms
        tokens: List[NoteToken] = []
        for i, n in enumerate(notes):
            if i + 1 < len(notes):
                # Duration = inter-onset gap quantized to the 16th grid.
                gap = notes[i + 1].onset_ms - n.onset_ms
                duration = max(1, math.floor(gap / step_ms + 0.5))
            else:
                duration = 1
            tokens.append(NoteToken(pitch=n.pitch, duration_sixteenths=duration))
        return GeneratorRequest(
            kind=GeneratorKind.MELODY,
            primer=tuple(tokens),
            requested_length=2 * self.threshold,
            seed=self.seed,
        )
