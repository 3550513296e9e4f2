"""Pluggable melody/drum generation.

Ships a deterministic stub that emulates the behavioral contract of the
neural generators it stands in for: melodies stay in the primer's key and
roughly match its note density; drum beats resample the primer's
per-instrument hit densities.  A remote plugin forwards requests over the
wire so an out-of-process model can answer instead.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .improv import GeneratorKind, GeneratorRequest, GeneratorResponse, NoteToken
from .model import DRUM_INSTRUMENTS, KICK, pitch_class

log = logging.getLogger(__name__)

MAJOR_DEGREES = frozenset({0, 2, 4, 5, 7, 9, 11})
MINOR_DEGREES = frozenset({0, 2, 3, 5, 7, 8, 10})

SCALES = {"major": MAJOR_DEGREES, "natural-minor": MINOR_DEGREES}
_SCALE_ORDER = ("major", "natural-minor")  # tie-break: major first

WALK_CLAMP_MARGIN = 5
FALLBACK_INTERVALS = (-2, -1, 1, 2)


@dataclass(frozen=True)
class KeyEstimate:
    tonic: int  # pitch class 0..11
    scale: str  # "major" | "natural-minor"
    score: float

    @property
    def member_classes(self) -> frozenset:
        return frozenset((self.tonic + d) % 12 for d in SCALES[self.scale])


def infer_key(pitches: Sequence[int]) -> KeyEstimate:
    """Best (tonic, scale) under the dot product of the normalized
    pitch-class histogram with binary scale-membership templates.

    Ties break by lower tonic, then major before minor.  Relative
    major/minor pairs share a template, so the major wins those ties.
    """
    if not pitches:
        raise ValueError("cannot infer a key from no pitches")
    histogram = [0] * 12
    for p in pitches:
        histogram[pitch_class(p)] += 1
    total = sum(histogram)
    # integer mass keeps tie comparisons exact; normalize only for the score
    best_mass = -1
    best: Optional[KeyEstimate] = None
    for tonic in range(12):
        for scale in _SCALE_ORDER:
            mass = sum(histogram[(tonic + d) % 12] for d in SCALES[scale])
            if mass > best_mass:
                best_mass = mass
                best = KeyEstimate(tonic=tonic, scale=scale, score=mass / total)
    assert best is not None
    return best


def _snap_to_scale(raw: int, members: frozenset, lo: int, hi: int) -> int:
    """Nearest in-range pitch whose class is in the scale; ties go lower."""
    for distance in range(12):
        for candidate in (raw - distance, raw + distance):
            if lo <= candidate <= hi and pitch_class(candidate) in members:
                return candidate
    raise ValueError(f"no scale pitch within {lo}..{hi}")


class StubMelodyGenerator:
    """Seeded first-order random walk over the primer's inferred scale."""

    name = "stub"
    kinds = (GeneratorKind.MELODY, GeneratorKind.DRUMS)

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        if request.kind is GeneratorKind.DRUMS:
            return stub_generate_drums(request)
        return stub_generate(request)


def stub_generate(request: GeneratorRequest) -> GeneratorResponse:
    if request.kind is not GeneratorKind.MELODY:
        raise ValueError("melody stub got a non-melody request")
    rng = random.Random(request.seed)
    primer = request.primer
    pitches = [t.pitch for t in primer]
    durations = [t.duration_sixteenths for t in primer]
    if len(pitches) >= 2:
        intervals: Tuple[int, ...] = tuple(
            b - a for a, b in zip(pitches, pitches[1:])
        )
    else:
        intervals = FALLBACK_INTERVALS
    key = infer_key(pitches)
    members = key.member_classes
    lo = max(0, min(pitches) - WALK_CLAMP_MARGIN)
    hi = min(127, max(pitches) + WALK_CLAMP_MARGIN)
    prev = pitches[-1]
    melody: List[NoteToken] = []
    for _ in range(request.requested_length):
        raw = prev + rng.choice(intervals)
        raw = max(lo, min(hi, raw))
        pitch = _snap_to_scale(raw, members, lo, hi)
        duration = rng.choice(durations)
        melody.append(NoteToken(pitch=pitch, duration_sixteenths=duration))
        prev = pitch
    return GeneratorResponse(kind=GeneratorKind.MELODY, melody=tuple(melody))


def stub_generate_drums(request: GeneratorRequest) -> GeneratorResponse:
    if request.kind is not GeneratorKind.DRUMS:
        raise ValueError("drum stub got a non-drum request")
    rng = random.Random(request.seed)
    steps = request.drum_steps
    length = request.requested_length if request.requested_length > 1 else len(steps)
    length = max(length, 1)
    densities: Dict[str, float] = {}
    for instrument in DRUM_INSTRUMENTS:
        hits = sum(1 for s in steps if instrument in s)
        densities[instrument] = hits / len(steps) if steps else 0.0
    out: List[frozenset] = []
    for step in range(length):
        hits = {
            instrument
            for instrument in DRUM_INSTRUMENTS
            if rng.random() < densities[instrument]
        }
        if step == 0:
            hits.add(KICK)  # downbeat anchor
        out.append(frozenset(hits))
    return GeneratorResponse(kind=GeneratorKind.DRUMS, drum_steps=tuple(out))


class RemoteGenerator:
    """Forwards requests to an out-of-process generator over the wire.

    Failures of any kind degrade to an empty response so the timeline
    never sees an exception or a stall beyond the deadline.
    """

    name = "remote"
    kinds = (GeneratorKind.MELODY, GeneratorKind.DRUMS)

    def __init__(self, host: str, port: int, timeout_s: float = 5.0):
        self.host = host
        self.port = port
        self.timeout_s = timeout_s

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        from . import osc  # local import: keep wire code out of pure path

        try:
            return osc.remote_generate(
                request, self.host, self.port, self.timeout_s
            )
        except Exception:
            log.exception("remote generation failed; returning empty response")
            return GeneratorResponse(kind=request.kind)


def make_generator(name: str, remote_endpoint: Optional[Tuple[str, int]] = None,
                   timeout_s: float = 5.0):
    """Configuration-level plugin selection: built-in stub or remote."""
    if name == "stub":
        return StubMelodyGenerator()
    if name == "remote":
        if remote_endpoint is None:
            raise ValueError("remote generator needs an endpoint")
        return RemoteGenerator(remote_endpoint[0], remote_endpoint[1], timeout_s)
    raise ValueError(f"unknown generator {name!r}")
