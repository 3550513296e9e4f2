"""The authoritative loop: playable-note store, mode state machine,
recording semantics, and the tick scheduler that emits due events.

Exactly one timeline thread may call the mutating methods (tick, note_on,
note_off, mode/spec changes).  The generator worker communicates only via
single-slot mailboxes; tick never blocks on generation.
"""

from __future__ import annotations

import heapq
import math
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import drums as drum_rules
from .improv import (
    GeneratorKind,
    GeneratorRequest,
    GeneratorResponse,
    ImprovMachine,
    Phase,
)
from .mailbox import Mailbox
from .model import (
    BASS,
    KEYS,
    LiveNote,
    Mode,
    OutboundNote,
    PlayableNote,
    Tempo,
    TimeSignature,
    TrackKind,
)
from .transport import CLICK_VELOCITY, LoopSpec, click_events, tap_tempo

LOOP_NOTE_VELOCITY = 96
_EPS = 1e-6


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class Emission:
    """An outbound note with the grid time it was scheduled for (None for
    input-driven events, which have no ideal time)."""

    note: OutboundNote
    ideal_ms: Optional[float] = None


@dataclass
class RecordingSession:
    target: TrackKind
    started: bool = False
    start_position: int = 0
    captured: List[PlayableNote] = field(default_factory=list)
    # pitch -> (grid position, onset_ms) for notes awaiting release
    open_notes: Dict[int, Tuple[int, float]] = field(default_factory=dict)


_MODE_INSTRUMENT = {
    Mode.BASS: BASS,
    Mode.CHORDS: KEYS,
    Mode.IMPROV: KEYS,
    Mode.FREE: KEYS,
}

_MODE_TRACK = {Mode.BASS: TrackKind.BASS, Mode.CHORDS: TrackKind.CHORDS}


class LooperEngine:
    def __init__(
        self,
        spec: Optional[LoopSpec] = None,
        threshold: int = 16,
        seed: Optional[int] = None,
        octave_align: bool = False,
        generator=None,
        generation: str = "inline",
    ):
        self.spec = spec or LoopSpec(2, TimeSignature(4, 4), Tempo(120.0))
        self.mode = Mode.FREE
        self.playing = False
        self.click_muted = False
        self.octave_align = octave_align
        self.machine = ImprovMachine(threshold=threshold, seed=seed)
        self.generator = generator
        self.generation = generation
        self.session: Optional[RecordingSession] = None
        self.bass_line: List[PlayableNote] = []
        self.drum_track = None  # Optional[drum_rules.DrumTrack]
        self.loops_completed = 0
        self.rev = 0  # bumped on every externally visible state change

        self._notes: List[PlayableNote] = []
        self._by_position: Dict[int, List[PlayableNote]] = {}
        self._tap_times: List[float] = []
        self._next_step = 0
        self._next_step_time = 0.0
        self._noteoffs: List[Tuple[int, int, str, int]] = []  # (step, seq, instr, pitch)
        self._noteoff_seq = 0
        self._sounding: Dict[Tuple[str, int], int] = {}
        self._live_echoes: Dict[int, List[str]] = {}  # input pitch -> echo instruments

        self._request_box: Mailbox = Mailbox()
        self._response_box: Mailbox = Mailbox()
        self._worker: Optional[threading.Thread] = None
        self._worker_stop = threading.Event()
        if generation == "worker":
            self._worker = threading.Thread(
                target=self._worker_loop, name="generator", daemon=True
            )
            self._worker.start()

        self._install_clicks()

    # -- structure ----------------------------------------------------------

    def set_loop_spec(self, bars: int, numerator: int, denominator: int) -> None:
        if self.playing:
            raise EngineError("cannot change loop structure during playback")
        new_spec = LoopSpec(bars, TimeSignature(numerator, denominator), self.spec.tempo)
        length = new_spec.sequence_length_sixteenths
        self.spec = new_spec
        # drop events beyond the new sequence length, keep the rest
        self._notes = [
            n for n in self._notes
            if n.track is not TrackKind.CLICK and n.position < length
        ]
        self.bass_line = [n for n in self.bass_line if n.position < length]
        self.drum_track = None
        self._install_clicks()
        self._touch()

    def set_qpm(self, qpm: float) -> None:
        self.spec = self.spec.with_tempo(Tempo(qpm))
        self._touch()

    def tap(self, now_ms: float) -> None:
        self._tap_times.append(now_ms)
        if len(self._tap_times) > 16:
            del self._tap_times[:-16]
        tempo = tap_tempo(self._tap_times)
        if tempo is not None:
            self.spec = self.spec.with_tempo(tempo)
            self._touch()

    # -- playback -----------------------------------------------------------

    def start(self, now_ms: float) -> None:
        if self.playing:
            return
        self.playing = True
        self._next_step = 0
        self._next_step_time = now_ms
        self._noteoffs.clear()
        self.loops_completed = 0
        self._touch()

    def stop(self) -> List[Emission]:
        """Halt the tick loop, emitting note-offs for everything sounding."""
        if not self.playing:
            return []
        emissions: List[Emission] = []
        for (instrument, pitch), count in sorted(self._sounding.items()):
            for _ in range(count):
                emissions.append(Emission(OutboundNote(instrument, pitch, 0)))
        self._sounding.clear()
        self._noteoffs.clear()
        self._live_echoes.clear()
        self.session = None
        self.playing = False
        self._touch()
        return emissions

    def set_mode(self, mode: Mode) -> None:
        if not self.playing:
            raise EngineError("modes act on the live loop; start playback first")
        if mode is self.mode:
            return
        self.session = None  # leaving Bass/Chords before commit discards
        self.mode = mode
        if mode in (Mode.BASS, Mode.CHORDS):
            self.session = RecordingSession(target=_MODE_TRACK[mode])
        elif mode is Mode.IMPROV:
            self.machine.reset()
        self._touch()

    def set_gate(self, engaged: bool) -> None:
        self.machine.gate(engaged)
        self._touch()

    def set_click_muted(self, muted: bool) -> None:
        self.click_muted = muted
        self._touch()

    # -- drums --------------------------------------------------------------

    def derive_drums_now(self) -> None:
        """Install the deterministic drum track built from the bassline."""
        self.drum_track = drum_rules.derive_drums(self.bass_line, self.spec)
        self._install_drums()

    def request_drum_generation(self) -> None:
        """Send the deterministic beat to the drum generator as a primer."""
        if self.drum_track is None or self.drum_track.source is not drum_rules.DrumSource.DETERMINISTIC:
            self.derive_drums_now()
        request = drum_rules.drums_primer(
            self.drum_track, self.spec, seed=self.machine.seed
        )
        self._dispatch(request, self.machine.request_serial)

    # -- performer input ----------------------------------------------------

    def note_on(self, pitch: int, velocity: int, now_ms: float) -> List[Emission]:
        if not self.playing:
            return []
        note = LiveNote(pitch=pitch, velocity=velocity, onset_ms=now_ms)
        instrument = _MODE_INSTRUMENT[self.mode]
        out_pitch = pitch
        if self.mode in (Mode.BASS, Mode.CHORDS):
            self._record_note_on(note)
        elif self.mode is Mode.IMPROV:
            out_pitch, request = self.machine.note_on(note, self.spec)
            if request is not None:
                self._dispatch(request, self.machine.request_serial)
            self._touch()
        self._live_echoes.setdefault(pitch, []).append(instrument)
        return [self._emit_on(instrument, out_pitch, velocity)]

    def note_off(self, pitch: int, now_ms: float) -> List[Emission]:
        stack = self._live_echoes.get(pitch)
        instrument = stack.pop() if stack else _MODE_INSTRUMENT[self.mode]
        if stack is not None and not stack:
            del self._live_echoes[pitch]
        if self.mode in (Mode.BASS, Mode.CHORDS) and self.session is not None:
            self._record_note_off(pitch, now_ms)
        out_pitch = self.machine.note_off(pitch)
        return [self._emit_off(instrument, out_pitch)]

    # -- scheduler ----------------------------------------------------------

    def tick(self, now_ms: float) -> List[Emission]:
        """Emit everything due at or before now: scheduled note-ons for the
        grid positions reached, expiring note-offs, recording finalization
        at the loop wrap, and any pending generator response."""
        emissions: List[Emission] = []
        self._poll_generation()
        if not self.playing:
            return emissions
        length = self.spec.sequence_length_sixteenths
        while self._next_step_time <= now_ms + _EPS:
            step = self._next_step
            position = step % length
            ideal = self._next_step_time
            if position == 0 and step > 0:
                self.loops_completed += 1
                self._finalize_recording(ideal)
            while self._noteoffs and self._noteoffs[0][0] <= step:
                _, _, instrument, pitch = heapq.heappop(self._noteoffs)
                emissions.append(self._emit_off(instrument, pitch, ideal))
            for note in self._by_position.get(position, ()):
                if note.track is TrackKind.CLICK and self.click_muted:
                    continue
                velocity = (
                    CLICK_VELOCITY if note.track is TrackKind.CLICK else LOOP_NOTE_VELOCITY
                )
                emissions.append(
                    self._emit_on(note.instrument, note.pitch, velocity, ideal)
                )
                self._noteoff_seq += 1
                heapq.heappush(
                    self._noteoffs,
                    (step + note.duration_sixteenths, self._noteoff_seq,
                     note.instrument, note.pitch),
                )
            self._next_step += 1
            self._next_step_time += self.spec.sixteenth_ms
            self._touch()  # playhead moved
        return emissions

    def next_deadline_ms(self) -> Optional[float]:
        return self._next_step_time if self.playing else None

    @property
    def playhead(self) -> int:
        if not self.playing or self._next_step == 0:
            return 0
        return (self._next_step - 1) % self.spec.sequence_length_sixteenths

    def playable_notes(self) -> List[PlayableNote]:
        return sorted(self._notes, key=lambda n: (n.position, n.track.value, n.pitch))

    def close(self) -> None:
        self._worker_stop.set()
        if self._worker is not None:
            self._worker.join(timeout=2.0)

    # -- snapshot ------------------------------------------------------------

    def snapshot(self) -> dict:
        """Immutable JSON-friendly view of engine state for monitors."""
        return {
            "v": 1,
            "rev": self.rev,
            "playing": self.playing,
            "mode": self.mode.value,
            "phase": self.machine.phase.value,
            "playhead": self.playhead,
            "qpm": self.spec.tempo.qpm,
            "spec": {
                "bars": self.spec.num_bars,
                "numerator": self.spec.time_signature.numerator,
                "denominator": self.spec.time_signature.denominator,
                "length": self.spec.sequence_length_sixteenths,
            },
            "threshold": self.machine.threshold,
            "accumulated": len(self.machine.accumulated),
            "queue_depth": self.machine.queue_depth,
            "gate": self.machine.gate_engaged,
            "click_muted": self.click_muted,
            "drum_source": self.drum_track.source.value if self.drum_track else None,
            "notes": [
                {
                    "track": n.track.value,
                    "pitch": n.pitch,
                    "instrument": n.instrument,
                    "position": n.position,
                    "duration": n.duration_sixteenths,
                }
                for n in self.playable_notes()
            ],
        }

    # -- internals -----------------------------------------------------------

    def _touch(self) -> None:
        self.rev += 1

    def _emit_on(self, instrument: str, pitch: int, velocity: int,
                 ideal: Optional[float] = None) -> Emission:
        key = (instrument, pitch)
        self._sounding[key] = self._sounding.get(key, 0) + 1
        return Emission(OutboundNote(instrument, pitch, velocity), ideal)

    def _emit_off(self, instrument: str, pitch: int,
                  ideal: Optional[float] = None) -> Emission:
        key = (instrument, pitch)
        count = self._sounding.get(key, 0)
        if count <= 1:
            self._sounding.pop(key, None)
        else:
            self._sounding[key] = count - 1
        return Emission(OutboundNote(instrument, pitch, 0), ideal)

    def _install_clicks(self) -> None:
        self._notes = [n for n in self._notes if n.track is not TrackKind.CLICK]
        self._notes.extend(click_events(self.spec))
        self._reindex()

    def _install_drums(self) -> None:
        self._notes = [n for n in self._notes if n.track is not TrackKind.DRUMS]
        if self.drum_track is not None:
            self._notes.extend(self.drum_track.notes)
        self._reindex()
        self._touch()

    def _reindex(self) -> None:
        by_position: Dict[int, List[PlayableNote]] = {}
        for note in self._notes:
            by_position.setdefault(note.position, []).append(note)
        self._by_position = by_position

    def _quantize_now(self, onset_ms: float) -> int:
        """Nearest grid position for a live onset, relative to the running
        playhead (robust to live qpm changes)."""
        step_ms = self.spec.sixteenth_ms
        offset_steps = (onset_ms - self._next_step_time) / step_ms
        abs_step = math.floor(self._next_step + offset_steps + 0.5)
        return max(0, abs_step) % self.spec.sequence_length_sixteenths

    def _record_note_on(self, note: LiveNote) -> None:
        session = self.session
        if session is None:
            return
        position = self._quantize_now(note.onset_ms)
        if not session.started:
            session.started = True
            session.start_position = position
            self._touch()
        session.open_notes[note.pitch] = (position, note.onset_ms)

    def _record_note_off(self, pitch: int, release_ms: float) -> None:
        session = self.session
        if session is None or pitch not in session.open_notes:
            return
        position, onset_ms = session.open_notes.pop(pitch)
        self._capture(session, pitch, position, onset_ms, release_ms)

    def _capture(self, session: RecordingSession, pitch: int, position: int,
                 onset_ms: float, release_ms: float) -> None:
        step_ms = self.spec.sixteenth_ms
        duration = max(1, round((release_ms - onset_ms) / step_ms))
        max_duration = 2 * self.spec.sequence_length_sixteenths - position
        duration = min(duration, max_duration)
        instrument = BASS if session.target is TrackKind.BASS else KEYS
        session.captured.append(
            PlayableNote(
                track=session.target,
                pitch=pitch,
                instrument=instrument,
                position=position,
                duration_sixteenths=duration,
            )
        )

    def _finalize_recording(self, wrap_ms: float) -> None:
        session = self.session
        if session is None or not session.started:
            return
        for pitch, (position, onset_ms) in list(session.open_notes.items()):
            self._capture(session, pitch, position, onset_ms, wrap_ms)
        session.open_notes.clear()
        if session.target is TrackKind.BASS:
            self._notes = [n for n in self._notes if n.track is not TrackKind.BASS]
            self._notes.extend(session.captured)
            self.bass_line = sorted(session.captured, key=lambda n: n.position)
            if self.drum_track is not None:
                # the old drums were derived from a bassline that no longer
                # exists; rebuild the deterministic track
                self.drum_track = drum_rules.derive_drums(self.bass_line, self.spec)
                self._install_drums()
        else:
            self._notes.extend(session.captured)
        self._reindex()
        self.session = None
        self.mode = Mode.FREE
        self._touch()

    # -- generation hand-off -------------------------------------------------

    def _dispatch(self, request: GeneratorRequest, serial: int) -> None:
        if self.generator is None:
            return
        if self.generation == "inline":
            response = self.generator.generate(request)
            self._handle_response(serial, response)
        else:
            self._request_box.put((serial, request))

    def _poll_generation(self) -> None:
        item = self._response_box.take()
        if item is not None:
            serial, response = item
            self._handle_response(serial, response)

    def _handle_response(self, serial: int, response: GeneratorResponse) -> None:
        if response.kind is GeneratorKind.DRUMS:
            fallback = self.drum_track or drum_rules.derive_drums(
                self.bass_line, self.spec
            )
            self.drum_track = drum_rules.install_generated_drums(
                response, self.spec, fallback
            )
            self._install_drums()
            return
        reference = self.machine.last_input_pitch if self.octave_align else None
        self.machine.on_response(response, serial=serial, align_reference=reference)
        self._touch()

    def _worker_loop(self) -> None:
        while not self._worker_stop.is_set():
            item = self._request_box.take_blocking(timeout_s=0.2)
            if item is None:
                continue
            serial, request = item
            try:
                response = self.generator.generate(request)
            except Exception:
                response = GeneratorResponse(kind=request.kind)
            self._response_box.put((serial, response))
