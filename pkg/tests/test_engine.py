from collections import Counter

import pytest

from jamloop.drums import DrumSource
from jamloop.engine import EngineError, LooperEngine
from jamloop.generator import StubMelodyGenerator
from jamloop.improv import GeneratorKind, GeneratorResponse, NoteToken, Phase
from jamloop.model import Mode, Tempo, TimeSignature, TrackKind
from jamloop.transport import LoopSpec


def make_engine(bars=1, numerator=4, denominator=4, qpm=120.0, **kwargs):
    spec = LoopSpec(bars, TimeSignature(numerator, denominator), Tempo(qpm))
    kwargs.setdefault("generator", StubMelodyGenerator())
    return LooperEngine(spec=spec, **kwargs)


def run_loops(engine, loops, start_ms=0.0, step_events=None):
    """Drive tick deterministically through N loop passes, returning all
    emissions.  step_events maps absolute step -> callable(engine, now)."""
    engine.start(start_ms)
    emissions = []
    total_steps = loops * engine.spec.sequence_length_sixteenths
    for step in range(total_steps + 1):
        now = start_ms + step * engine.spec.sixteenth_ms
        if step_events and step in step_events:
            emissions.extend(step_events[step](engine, now) or [])
        if step < total_steps:
            emissions.extend(engine.tick(now))
    return emissions


def ons(emissions):
    return [e for e in emissions if e.note.velocity > 0]


def offs(emissions):
    return [e for e in emissions if e.note.velocity == 0]


class TestSetLoopSpec:
    def test_two_bars_click_counts(self):
        engine = make_engine()
        engine.set_loop_spec(2, 4, 4)
        assert engine.spec.sequence_length_sixteenths == 32
        clicks = [n for n in engine.playable_notes() if n.track is TrackKind.CLICK]
        assert len(clicks) == 2 + 6

    def test_one_bar_length(self):
        engine = make_engine()
        engine.set_loop_spec(1, 4, 4)
        assert engine.spec.sequence_length_sixteenths == 16

    def test_invalid_denominator(self):
        engine = make_engine()
        with pytest.raises(ValueError):
            engine.set_loop_spec(1, 4, 5)

    def test_rejected_while_playing(self):
        engine = make_engine()
        engine.start(0.0)
        with pytest.raises(EngineError):
            engine.set_loop_spec(2, 4, 4)

    def test_qpm_change_allowed_live(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_qpm(150.0)
        assert engine.spec.tempo.qpm == 150.0

    def test_shrinking_drops_out_of_range_notes(self):
        engine = make_engine(bars=2)
        engine.start(0.0)
        engine.set_mode(Mode.CHORDS)
        engine.note_on(60, 100, 0.0)
        engine.note_off(60, 125.0)
        run_to_wrap(engine, from_ms=125.0)
        engine.note_on(64, 100, engine.spec.loop_duration_ms + 18 * 125.0)
        engine.stop()
        engine.set_loop_spec(1, 4, 4)
        chords = [n for n in engine.playable_notes() if n.track is TrackKind.CHORDS]
        assert all(n.position < 16 for n in chords)


def run_to_wrap(engine, from_ms):
    """Tick up to and including the next wrap of the loop."""
    step_ms = engine.spec.sixteenth_ms
    length = engine.spec.sequence_length_sixteenths
    emissions = []
    now = from_ms
    target_loops = engine.loops_completed + 1
    while engine.loops_completed < target_loops:
        now += step_ms
        emissions.extend(engine.tick(now))
    return emissions, now


class TestPlayback:
    def test_first_event_is_click_one(self):
        engine = make_engine()
        engine.start(0.0)
        emissions = engine.tick(0.0)
        first_on = ons(emissions)[0]
        assert first_on.note.instrument == "click-1"
        assert first_on.ideal_ms == 0.0

    def test_start_while_playing_is_noop(self):
        engine = make_engine()
        engine.start(0.0)
        engine.tick(300.0)
        engine.start(999.0)
        assert engine._next_step > 0

    def test_stop_when_stopped_is_noop(self):
        engine = make_engine()
        assert engine.stop() == []

    def test_stop_emits_noteoffs_for_sounding(self):
        engine = make_engine()
        engine.start(0.0)
        engine.tick(0.0)
        engine.note_on(40, 90, 10.0)  # free-mode echo, still sounding
        emissions = engine.stop()
        assert any(e.note.pitch == 40 and e.note.is_off for e in emissions)

    def test_each_note_emitted_once_per_loop(self):
        engine = make_engine(bars=2)
        loops = 5
        emissions = run_loops(engine, loops)
        counts = Counter(
            (e.note.instrument, e.note.pitch, e.ideal_ms) for e in ons(emissions)
        )
        assert all(c == 1 for c in counts.values())
        per_pass = Counter(e.note.instrument for e in ons(emissions))
        clicks_per_loop = 2 + 6
        assert per_pass["click-1"] == loops
        assert per_pass["click-2"] == loops
        assert per_pass["click-3"] == 6 * loops

    def test_ons_and_offs_balance_over_run(self):
        engine = make_engine()
        emissions = run_loops(engine, 3)
        emissions.extend(engine.stop())
        balance = Counter()
        for e in emissions:
            key = (e.note.instrument, e.note.pitch)
            balance[key] += 1 if e.note.velocity > 0 else -1
        assert all(v == 0 for v in balance.values())

    def test_click_mute(self):
        engine = make_engine()
        engine.set_click_muted(True)
        emissions = run_loops(engine, 1)
        assert ons(emissions) == []


class TestModes:
    def test_mode_requires_playing(self):
        engine = make_engine()
        with pytest.raises(EngineError):
            engine.set_mode(Mode.BASS)

    def test_entering_bass_opens_session(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_mode(Mode.BASS)
        assert engine.session is not None
        assert not engine.session.started

    def test_leaving_unstarted_session_discards(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_mode(Mode.BASS)
        engine.set_mode(Mode.FREE)
        assert engine.session is None
        assert engine.bass_line == []

    def test_entering_improv_resets_machine(self):
        engine = make_engine(threshold=2)
        engine.start(0.0)
        engine.set_mode(Mode.IMPROV)
        engine.note_on(60, 100, 10.0)
        engine.set_mode(Mode.FREE)
        engine.set_mode(Mode.IMPROV)
        assert engine.machine.phase is Phase.ACCUMULATING
        assert engine.machine.accumulated == []

    def test_mode_switch_keeps_committed_notes(self):
        engine = make_engine()
        engine.start(0.0)
        record_bass(engine, [(60, 0.0)])
        committed = [n for n in engine.playable_notes() if n.track is TrackKind.BASS]
        assert committed
        engine.set_mode(Mode.CHORDS)
        engine.set_mode(Mode.FREE)
        still = [n for n in engine.playable_notes() if n.track is TrackKind.BASS]
        assert still == committed


def record_bass(engine, notes):
    """Play (pitch, onset_ms) pairs in bass mode and run to the wrap."""
    engine.set_mode(Mode.BASS)
    last = 0.0
    for pitch, onset in notes:
        engine.tick(onset)
        engine.note_on(pitch, 100, onset)
        engine.note_off(pitch, onset + 50.0)
        last = onset
    return run_to_wrap(engine, from_ms=last)


class TestRecording:
    def test_first_note_starts_session(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_mode(Mode.BASS)
        engine.tick(4 * 125.0)
        engine.note_on(40, 100, 4 * 125.0 + 3.0)
        assert engine.session.started
        engine.note_off(40, 4 * 125.0 + 60.0)
        assert engine.session.captured[0].position == 4

    def test_bass_replaces_previous(self):
        engine = make_engine()
        engine.start(0.0)
        record_bass(engine, [(40, 0.0), (43, 8 * 125.0)])
        first = sorted(n.position for n in engine.bass_line)
        assert first == [0, 8]
        engine.set_mode(Mode.BASS)
        base = engine.spec.loop_duration_ms
        engine.tick(base + 250.0)
        engine.note_on(45, 100, base + 250.0)
        engine.note_off(45, base + 300.0)
        run_to_wrap(engine, from_ms=base + 300.0)
        assert [n.position for n in engine.bass_line] == [2]
        assert [n.pitch for n in engine.bass_line] == [45]

    def test_chords_merge(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_mode(Mode.CHORDS)
        engine.note_on(60, 100, 0.0)
        engine.note_off(60, 100.0)
        run_to_wrap(engine, from_ms=100.0)
        engine.set_mode(Mode.CHORDS)
        base = engine.spec.loop_duration_ms
        engine.note_on(64, 100, base + 500.0)
        engine.note_off(64, base + 600.0)
        run_to_wrap(engine, from_ms=base + 600.0)
        chords = [n for n in engine.playable_notes() if n.track is TrackKind.CHORDS]
        assert sorted(n.pitch for n in chords) == [60, 64]

    def test_unstarted_session_survives_wrap(self):
        engine = make_engine()
        engine.start(0.0)
        engine.set_mode(Mode.BASS)
        run_to_wrap(engine, from_ms=0.0)
        assert engine.session is not None
        assert not engine.session.started
        assert engine.mode is Mode.BASS

    def test_mode_reverts_to_free_after_commit(self):
        engine = make_engine()
        engine.start(0.0)
        record_bass(engine, [(40, 0.0)])
        assert engine.mode is Mode.FREE
        assert engine.session is None

    def test_recorded_bass_plays_next_loop(self):
        engine = make_engine()
        engine.start(0.0)
        record_bass(engine, [(40, 0.0)])
        base = engine.spec.loop_duration_ms
        emissions = []
        for step in range(16):
            emissions.extend(engine.tick(base + (step + 1) * 125.0))
        bass_ons = [e for e in ons(emissions) if e.note.instrument == "bass"]
        assert len(bass_ons) == 1


class TestDrumsIntegration:
    def test_derive_installs_deterministic(self):
        engine = make_engine()
        engine.start(0.0)
        record_bass(engine, [(40, 0.0), (43, 8 * 125.0)])
        engine.derive_drums_now()
        assert engine.drum_track.source is DrumSource.DETERMINISTIC
        drums = [n for n in engine.playable_notes() if n.track is TrackKind.DRUMS]
        assert drums

    def test_generated_drums_replace(self):
        engine = make_engine(seed=5)
        engine.start(0.0)
        record_bass(engine, [(40, 0.0)])
        engine.request_drum_generation()
        assert engine.drum_track.source is DrumSource.GENERATED

    def test_new_bass_invalidates_generated_drums(self):
        engine = make_engine(seed=5)
        engine.start(0.0)
        record_bass(engine, [(40, 0.0)])
        engine.request_drum_generation()
        assert engine.drum_track.source is DrumSource.GENERATED
        engine.set_mode(Mode.BASS)
        base = engine.spec.loop_duration_ms * 2
        engine.tick(base)
        engine.note_on(45, 100, base + 10.0)
        engine.note_off(45, base + 80.0)
        run_to_wrap(engine, from_ms=base + 80.0)
        assert engine.drum_track.source is DrumSource.DETERMINISTIC
        snares = [n for n in engine.drum_track.notes if n.instrument == "snare"]
        assert len(snares) == 1


class TestImprovIntegration:
    def test_substitution_path(self):
        engine = make_engine(threshold=2, seed=7)
        engine.start(0.0)
        engine.set_mode(Mode.IMPROV)
        engine.note_on(60, 100, 10.0)
        engine.note_off(60, 50.0)
        engine.note_on(62, 100, 135.0)
        engine.note_off(62, 180.0)
        # inline generation: response installed synchronously
        assert engine.machine.phase is Phase.REPLACING
        queue_head = engine.machine.generated[0]
        emissions = engine.note_on(64, 77, 260.0)
        assert emissions[0].note.pitch == queue_head
        assert emissions[0].note.velocity == 77

    def test_substituted_noteoff_pairing(self):
        engine = make_engine(threshold=1, seed=7)
        engine.start(0.0)
        engine.set_mode(Mode.IMPROV)
        engine.note_on(60, 100, 10.0)
        engine.note_off(60, 20.0)
        assert engine.machine.phase is Phase.REPLACING
        out_pitch = engine.machine.generated[0]
        engine.note_on(61, 90, 30.0)
        off = engine.note_off(61, 90.0)
        assert off[0].note.pitch == out_pitch
        assert off[0].note.is_off

    def test_free_mode_passthrough(self):
        engine = make_engine()
        engine.start(0.0)
        emissions = engine.note_on(60, 100, 5.0)
        assert emissions[0].note.pitch == 60
        assert emissions[0].note.instrument == "keys"

    def test_octave_align_applied(self):
        engine = make_engine(threshold=2, seed=7, octave_align=True)
        engine.start(0.0)
        engine.set_mode(Mode.IMPROV)
        engine.note_on(48, 100, 10.0)
        engine.note_off(48, 20.0)
        engine.note_on(50, 100, 135.0)
        engine.note_off(50, 150.0)
        assert engine.machine.phase is Phase.REPLACING
        first = engine.machine.generated[0]
        assert abs(first - 50) <= 6


class TestSnapshot:
    def test_snapshot_shape(self):
        engine = make_engine()
        snap = engine.snapshot()
        assert snap["v"] == 1
        assert snap["mode"] == "free"
        assert snap["phase"] == "accumulating"
        assert snap["spec"]["length"] == 16
        assert any(n["track"] == "click" for n in snap["notes"])

    def test_rev_advances_on_change(self):
        engine = make_engine()
        before = engine.rev
        engine.set_qpm(130.0)
        assert engine.rev > before
