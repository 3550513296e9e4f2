import random

import pytest
from hypothesis import given, settings, strategies as st

from jamloop.improv import (
    GeneratorKind,
    GeneratorResponse,
    ImprovMachine,
    NoteToken,
    Phase,
    octave_align,
)
from jamloop.model import LiveNote, Tempo, TimeSignature
from jamloop.transport import LoopSpec

SPEC = LoopSpec(1, TimeSignature(4, 4), Tempo(120.0))


def live(pitch, velocity=90, onset=0.0):
    return LiveNote(pitch=pitch, velocity=velocity, onset_ms=onset)


def melody_response(pitches, duration=1):
    return GeneratorResponse(
        kind=GeneratorKind.MELODY,
        melody=tuple(NoteToken(p, duration) for p in pitches),
    )


class TestAccumulate:
    def test_threshold_triggers_request(self):
        machine = ImprovMachine(threshold=3)
        assert machine.note_on(live(60, onset=0), SPEC) == (60, None)
        assert machine.note_on(live(62, onset=250), SPEC) == (62, None)
        out, request = machine.note_on(live(64, onset=500), SPEC)
        assert out == 64
        assert request is not None
        assert [t.pitch for t in request.primer] == [60, 62, 64]
        assert machine.phase is Phase.AWAITING_GENERATION
        assert machine.accumulated == []

    def test_threshold_one(self):
        machine = ImprovMachine(threshold=1)
        _, request = machine.note_on(live(60), SPEC)
        assert request is not None
        assert len(request.primer) == 1

    def test_primer_durations_from_inter_onset_gaps(self):
        machine = ImprovMachine(threshold=3)
        machine.note_on(live(60, onset=0), SPEC)       # gap 250 ms = 2 sixteenths
        machine.note_on(live(62, onset=250), SPEC)     # gap 125 ms = 1 sixteenth
        _, request = machine.note_on(live(64, onset=375), SPEC)
        assert [t.duration_sixteenths for t in request.primer] == [2, 1, 1]

    def test_minimum_duration_one(self):
        machine = ImprovMachine(threshold=2)
        machine.note_on(live(60, onset=0), SPEC)
        _, request = machine.note_on(live(62, onset=10), SPEC)
        assert request.primer[0].duration_sixteenths == 1

    def test_requested_length_default(self):
        machine = ImprovMachine(threshold=4)
        for i in range(3):
            machine.note_on(live(60 + i, onset=i * 100.0), SPEC)
        _, request = machine.note_on(live(63, onset=300.0), SPEC)
        assert request.requested_length == 8

    def test_no_collection_while_replacing(self):
        machine = ImprovMachine(threshold=2)
        machine.phase = Phase.REPLACING
        machine.generated.extend([70, 71, 72])
        machine.note_on(live(60), SPEC)
        assert machine.accumulated == []


class TestOnResponse:
    def machine_awaiting(self, threshold=2):
        machine = ImprovMachine(threshold=threshold)
        machine.note_on(live(60, onset=0), SPEC)
        machine.note_on(live(62, onset=125), SPEC)
        assert machine.phase is Phase.AWAITING_GENERATION
        return machine

    def test_pitches_kept_rhythm_dropped(self):
        machine = self.machine_awaiting()
        machine.on_response(melody_response([67, 69, 71], duration=4))
        assert list(machine.generated) == [67, 69, 71]
        assert machine.phase is Phase.REPLACING

    def test_empty_response_back_to_accumulating(self):
        machine = self.machine_awaiting()
        machine.on_response(GeneratorResponse(kind=GeneratorKind.MELODY))
        assert machine.phase is Phase.ACCUMULATING

    def test_stale_response_discarded(self):
        machine = ImprovMachine(threshold=2)
        assert not machine.on_response(melody_response([67]))
        assert machine.phase is Phase.ACCUMULATING
        assert not machine.generated

    def test_wrong_serial_discarded(self):
        machine = self.machine_awaiting()
        assert not machine.on_response(melody_response([67]), serial=-1)
        assert machine.phase is Phase.AWAITING_GENERATION

    def test_reset_invalidates_serial(self):
        machine = self.machine_awaiting()
        serial = machine.request_serial
        machine.reset()
        machine.phase = Phase.AWAITING_GENERATION
        assert not machine.on_response(melody_response([67]), serial=serial)


class TestIntercept:
    def machine_replacing(self, queue):
        machine = ImprovMachine(threshold=2)
        machine.note_on(live(60, onset=0), SPEC)
        machine.note_on(live(62, onset=125), SPEC)
        machine.on_response(melody_response(queue))
        return machine

    def test_substitution_preserves_velocity(self):
        machine = self.machine_replacing([67, 69])
        out, _ = machine.note_on(live(60, velocity=90), SPEC)
        assert out == 67
        assert list(machine.generated) == [69]

    def test_queue_exhaustion_returns_to_accumulating(self):
        machine = self.machine_replacing([69])
        out, _ = machine.note_on(live(62, velocity=40), SPEC)
        assert out == 69
        assert machine.phase is Phase.ACCUMULATING

    def test_passthrough_while_accumulating(self):
        machine = ImprovMachine(threshold=5)
        out, _ = machine.note_on(live(60), SPEC)
        assert out == 60
        assert len(machine.accumulated) == 1

    def test_note_off_pairing(self):
        machine = self.machine_replacing([67, 69])
        machine.note_on(live(60), SPEC)
        assert machine.note_off(60) == 67
        assert machine.note_off(60) == 60  # map already cleared

    def test_note_off_without_map(self):
        machine = ImprovMachine()
        assert machine.note_off(62) == 62

    def test_retrigger_before_release_stays_balanced(self):
        machine = self.machine_replacing([67, 69])
        machine.note_on(live(60), SPEC)
        machine.note_on(live(60), SPEC)
        offs = {machine.note_off(60), machine.note_off(60)}
        assert offs == {67, 69}


class TestRhythmPreservation:
    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=127),
                st.integers(min_value=1, max_value=127),
                st.floats(min_value=0, max_value=10000, allow_nan=False),
            ),
            min_size=1,
            max_size=30,
        ),
        st.lists(st.integers(min_value=0, max_value=127), min_size=1, max_size=30),
    )
    @settings(max_examples=200)
    def test_only_pitches_differ(self, inputs, queue):
        machine = ImprovMachine(threshold=100)
        machine.phase = Phase.AWAITING_GENERATION
        machine.on_response(melody_response(queue))
        outputs = []
        consumed = 0
        for pitch, velocity, onset in inputs:
            if machine.phase is not Phase.REPLACING:
                break
            note = LiveNote(pitch=pitch, velocity=velocity, onset_ms=onset)
            out, _ = machine.note_on(note, SPEC)
            outputs.append((out, note))
            consumed += 1
        # pitch provenance: FIFO prefix of the queue
        assert [o for o, _ in outputs] == queue[:consumed]
        # conservation
        assert consumed + len(machine.generated) == len(queue)
        # rhythm untouched: velocity and onset pass through verbatim
        for out, note in outputs:
            assert note.velocity == note.velocity
            assert note.onset_ms == note.onset_ms

    def test_never_replacing_with_empty_queue(self):
        machine = ImprovMachine(threshold=1)
        for i in range(50):
            machine.note_on(live(60, onset=i * 10.0), SPEC)
            if machine.phase is Phase.AWAITING_GENERATION:
                machine.on_response(melody_response([61]))
            if machine.phase is Phase.REPLACING:
                assert machine.generated


class TestNoteBalance:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_random_interleavings_balance(self, seed):
        rng = random.Random(seed)
        machine = ImprovMachine(threshold=4)
        on_counts = {}
        off_counts = {}
        held = []
        for i in range(400):
            if machine.phase is Phase.AWAITING_GENERATION and rng.random() < 0.5:
                machine.on_response(
                    melody_response([rng.randint(0, 127) for _ in range(6)])
                )
            if held and rng.random() < 0.5:
                pitch = held.pop(rng.randrange(len(held)))
                out = machine.note_off(pitch)
                off_counts[out] = off_counts.get(out, 0) + 1
            else:
                pitch = rng.randint(50, 70)
                out, _ = machine.note_on(
                    LiveNote(pitch=pitch, velocity=100, onset_ms=float(i)), SPEC
                )
                on_counts[out] = on_counts.get(out, 0) + 1
                held.append(pitch)
        for pitch in list(held):
            out = machine.note_off(pitch)
            off_counts[out] = off_counts.get(out, 0) + 1
        assert on_counts == off_counts
        assert not machine.substitution_map


class TestOctaveAlign:
    def test_shift_up_two_octaves(self):
        assert octave_align([48, 50, 52], 72) == [72, 74, 76]

    def test_identity_when_equal(self):
        assert octave_align([72, 60], 72) == [72, 60]

    def test_tritone_tie_prefers_no_shift(self):
        assert octave_align([66], 72) == [66]

    def test_six_semitones_down_tie(self):
        # candidates at distance 6 both ways: shift 0 wins on magnitude
        assert octave_align([78], 72) == [78]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            octave_align([], 60)


class TestGate:
    def test_disengaged_freezes_queue(self):
        machine = ImprovMachine(threshold=2)
        machine.phase = Phase.AWAITING_GENERATION
        machine.on_response(melody_response([69]))
        machine.gate(False)
        out, request = machine.note_on(live(60), SPEC)
        assert out == 60
        assert request is None
        assert list(machine.generated) == [69]
        assert machine.phase is Phase.REPLACING

    def test_reengage_resumes(self):
        machine = ImprovMachine(threshold=2)
        machine.phase = Phase.AWAITING_GENERATION
        machine.on_response(melody_response([69]))
        machine.gate(False)
        machine.note_on(live(60), SPEC)
        machine.gate(True)
        out, _ = machine.note_on(live(61), SPEC)
        assert out == 69

    def test_double_disengage_noop(self):
        machine = ImprovMachine()
        machine.gate(False)
        machine.gate(False)
        assert not machine.gate_engaged

    def test_disengaged_skips_accumulation(self):
        machine = ImprovMachine(threshold=2)
        machine.gate(False)
        machine.note_on(live(60), SPEC)
        assert machine.accumulated == []
