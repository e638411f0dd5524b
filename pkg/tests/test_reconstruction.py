import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import run_reconstruction
from ordialogue.backends import (
    AsrBackend,
    BackendDescriptor,
    BackendError,
    DiarizationBackend,
    VadBackend,
)
from ordialogue.reconstruction import (
    DiarizedSegment,
    ReconstructionConfig,
    TranscribedUtterance,
    gate_segments,
    reconstruct_chunk,
    reconstruct_recording,
    utterance_from_record,
    utterance_to_record,
)
from ordialogue.simulate import make_scenario, simulate_surgery
from ordialogue.timeline import AudioChunk, FrameActivitySeries, TimeSpan


def seg(start, end, label="SPEAKER 0", chunk=0):
    return DiarizedSegment(span=TimeSpan(start, end), raw_speaker_label=label, chunk_index=chunk)


def series(values, origin=0.0):
    return FrameActivitySeries(np.asarray(values, dtype=float), origin_s=origin)


class TestGateSegments:
    def test_threshold_is_inclusive(self):
        activity = series([0.31] * 100)
        assert gate_segments([seg(0, 1)], activity, 0.3) == [seg(0, 1)]

    def test_below_threshold_discarded(self):
        activity = series([0.29] * 100)
        assert gate_segments([seg(0, 1)], activity, 0.3) == []

    def test_zero_threshold_keeps_everything(self):
        activity = series([0.0] * 100)
        segments = [seg(0, 0.5), seg(0.5, 1)]
        assert gate_segments(segments, activity, 0.0) == segments

    def test_empty_input(self):
        assert gate_segments([], series([1.0]), 0.3) == []

    def test_order_preserved(self):
        activity = series([1.0] * 300)
        segments = [seg(2, 3), seg(0, 1), seg(1, 2)]
        assert gate_segments(segments, activity, 0.3) == segments

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_threshold(self, values, t_low, t_high):
        lo, hi = sorted((t_low, t_high))
        activity = series(values)
        segments = [seg(i * 0.01, (i + 1) * 0.01) for i in range(len(values))]
        kept_hi = gate_segments(segments, activity, hi)
        kept_lo = gate_segments(segments, activity, lo)
        assert set(s.span.start_s for s in kept_hi) <= set(s.span.start_s for s in kept_lo)


class StubVad(VadBackend):
    def __init__(self, activity):
        self._activity = activity
        self._descriptor = BackendDescriptor("vad", "stub-vad")

    @property
    def descriptor(self):
        return self._descriptor

    def activity(self, chunk):
        return self._activity


class StubDia(DiarizationBackend):
    def __init__(self, segments):
        self._segments = segments
        self._descriptor = BackendDescriptor("dia", "stub-dia")

    @property
    def descriptor(self):
        return self._descriptor

    def diarize(self, chunk):
        return self._segments


class StubAsr(AsrBackend):
    def __init__(self, text_by_start):
        self._by_start = text_by_start
        self._descriptor = BackendDescriptor("asr", "stub-asr")

    @property
    def descriptor(self):
        return self._descriptor

    def transcribe(self, chunk, span, run_index=0):
        return self._by_start[span.start_s]


class FailingDia(DiarizationBackend):
    @property
    def descriptor(self):
        return BackendDescriptor("dia", "failing-dia")

    def diarize(self, chunk):
        raise RuntimeError("model crashed")


def make_chunk(duration=10.0):
    class _Proxy:
        duration_s = duration

        def slice(self, a, b):
            return self

    return AudioChunk("s1", 0, 0.0, _Proxy())


class TestReconstructChunk:
    def test_gate_drops_low_activity_segment(self):
        # activity: 1.0 over [0, 2), zero elsewhere
        activity = series([1.0] * 200 + [0.0] * 800)
        segments = [seg(0.0, 1.0), seg(1.0, 2.0), seg(5.0, 6.0)]
        asr = StubAsr({0.0: "one", 1.0: "two", 5.0: "silent"})
        cfg = ReconstructionConfig()
        out = reconstruct_chunk(make_chunk(), StubVad(activity), StubDia(segments), asr, cfg)
        assert [u.text for u in out] == ["one", "two"]
        assert all(u.mean_vad >= cfg.vad_gate_threshold for u in out)

    def test_silent_chunk_empty(self):
        activity = series([0.0] * 1000)
        out = reconstruct_chunk(
            make_chunk(), StubVad(activity), StubDia([seg(0, 1)]), StubAsr({0.0: "x"}),
            ReconstructionConfig(),
        )
        assert out == []

    def test_scripted_exchange_reproduced(self, clean_sim):
        chunks_cfg = ReconstructionConfig()
        chunk = AudioChunk(
            clean_sim.scenario.surgery_id, 0, 0.0, clean_sim.audio.slice(0.0, 180.0)
        )
        out = reconstruct_chunk(chunk, clean_sim.vad, clean_sim.dia, clean_sim.asr, chunks_cfg)
        expected = [e for e in clean_sim.scenario.events if e.time_s < 180.0]
        assert len(out) == len(expected)
        assert [u.text for u in out] == [e.text for e in expected]

    def test_backend_error_carries_stage_and_chunk(self):
        activity = series([1.0] * 1000)
        with pytest.raises(BackendError) as err:
            reconstruct_chunk(
                make_chunk(), StubVad(activity), FailingDia(), StubAsr({}), ReconstructionConfig()
            )
        assert err.value.kind == "dia"
        assert err.value.chunk_index == 0

    def test_run_count(self):
        activity = series([1.0] * 100)
        out = reconstruct_chunk(
            make_chunk(1.0),
            StubVad(activity),
            StubDia([seg(0.0, 1.0)]),
            StubAsr({0.0: "hello"}),
            ReconstructionConfig(asr_run_count=3),
        )
        assert out[0].asr_runs == ("hello", "hello", "hello")
        assert out[0].text == "hello"


class TestReconstructRecording:
    def test_single_chunk_identity(self, clean_sim):
        cfg = ReconstructionConfig(chunk_len_s=clean_sim.scenario.duration_s)
        whole = reconstruct_recording(
            clean_sim.audio, clean_sim.vad, clean_sim.dia, clean_sim.asr, cfg, "sim-clean"
        )
        chunk = AudioChunk("sim-clean", 0, 0.0, clean_sim.audio)
        direct = reconstruct_chunk(chunk, clean_sim.vad, clean_sim.dia, clean_sim.asr, cfg)
        assert whole == direct

    def test_chunked_matches_monolithic(self, clean_sim):
        # scenario spans several 3-minute chunks; a no-chunking run is the oracle
        chunked = run_reconstruction(clean_sim)
        cfg = ReconstructionConfig(
            chunk_len_s=clean_sim.scenario.duration_s, asr_run_count=2
        )
        monolithic = reconstruct_recording(
            clean_sim.audio, clean_sim.vad, clean_sim.dia, clean_sim.asr, cfg, "sim-clean"
        )
        assert [u.text for u in chunked] == [u.text for u in monolithic]
        assert [u.span for u in chunked] == [u.span for u in monolithic]

    def test_sorted_and_in_bounds(self, clean_sim):
        utterances = run_reconstruction(clean_sim)
        starts = [u.span.start_s for u in utterances]
        assert starts == sorted(starts)
        assert all(u.span.end_s <= clean_sim.scenario.duration_s for u in utterances)

    def test_deterministic(self, clean_sim):
        first = run_reconstruction(clean_sim)
        second = run_reconstruction(clean_sim)
        assert first == second


class TestUtteranceInvariants:
    def test_text_must_equal_first_run(self):
        with pytest.raises(ValueError):
            TranscribedUtterance(
                segment=seg(0, 1), text="a", mean_vad=0.5, asr_runs=("b",)
            )

    def test_record_round_trip(self, clean_sim):
        utterance = run_reconstruction(clean_sim)[0]
        record = utterance_to_record(utterance, "sim-clean")
        assert record["v"] == 1
        assert utterance_from_record(record) == utterance
