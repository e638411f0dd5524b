"""Stage 1: per-chunk VAD, diarization, activity gating, and transcription.

Chunks are processed independently (concurrently when backends allow) and the
results are merged into a single start-time-ordered utterance list in absolute
recording time. A failure in any chunk aborts the run; partial results are
never emitted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .backends import AsrBackend, BackendError, DiarizationBackend, VadBackend
from .timeline import (
    DEFAULT_CHUNK_LEN_S,
    DEFAULT_FRAME_LEN_S,
    AudioChunk,
    FrameActivitySeries,
    TimeSpan,
    chunk_plan,
    mean_activity,
)


@dataclass(frozen=True)
class DiarizedSegment:
    """A diarizer-emitted speech segment with an anonymous speaker label."""

    span: TimeSpan  # absolute recording time
    raw_speaker_label: str
    chunk_index: int

    def __post_init__(self) -> None:
        if not self.raw_speaker_label:
            raise ValueError("raw speaker label must be non-empty")


@dataclass(frozen=True)
class TranscribedUtterance:
    segment: DiarizedSegment
    text: str
    mean_vad: float
    asr_runs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.asr_runs) < 1:
            raise ValueError("at least one ASR run required")
        if self.text != self.asr_runs[0]:
            raise ValueError("text must equal the first ASR run")

    @property
    def span(self) -> TimeSpan:
        return self.segment.span


@dataclass(frozen=True)
class ReconstructionConfig:
    chunk_len_s: float = DEFAULT_CHUNK_LEN_S
    vad_frame_s: float = DEFAULT_FRAME_LEN_S
    vad_gate_threshold: float = 0.3
    asr_run_count: int = 1

    def __post_init__(self) -> None:
        if self.chunk_len_s <= 0:
            raise ValueError("chunk length must be positive")
        if not 0.0 <= self.vad_gate_threshold <= 1.0:
            raise ValueError("VAD gate threshold must lie in [0, 1]")
        if self.asr_run_count < 1:
            raise ValueError("asr_run_count must be >= 1")


def gate_segments(
    segments: list[DiarizedSegment],
    activity: FrameActivitySeries,
    threshold: float,
) -> list[DiarizedSegment]:
    """Keep segments whose mean VAD activity is >= threshold, order preserved.

    Segments outside the series' coverage score 0 (kept only by a zero gate).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    kept = []
    for segment in segments:
        try:
            score = mean_activity(activity, segment.span)
        except ValueError:
            score = 0.0
        if score >= threshold:
            kept.append(segment)
    return kept


def _segment_score(segment: DiarizedSegment, activity: FrameActivitySeries) -> float:
    try:
        return mean_activity(activity, segment.span)
    except ValueError:
        return 0.0


def reconstruct_chunk(
    chunk: AudioChunk,
    vad: VadBackend,
    dia: DiarizationBackend,
    asr: AsrBackend,
    cfg: ReconstructionConfig,
) -> list[TranscribedUtterance]:
    """Run VAD -> diarize -> gate -> transcribe for one chunk."""
    try:
        activity = vad.activity(chunk)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError("vad", str(exc), chunk_index=chunk.chunk_index) from exc
    try:
        segments = dia.diarize(chunk)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError("dia", str(exc), chunk_index=chunk.chunk_index) from exc

    kept = gate_segments(segments, activity, cfg.vad_gate_threshold)
    utterances = []
    for segment in kept:
        runs = []
        for run_index in range(cfg.asr_run_count):
            try:
                runs.append(asr.transcribe(chunk, segment.span, run_index))
            except BackendError:
                raise
            except Exception as exc:
                raise BackendError("asr", str(exc), chunk_index=chunk.chunk_index) from exc
        utterances.append(
            TranscribedUtterance(
                segment=segment,
                text=runs[0],
                mean_vad=_segment_score(segment, activity),
                asr_runs=tuple(runs),
            )
        )
    utterances.sort(key=lambda u: (u.span.start_s, u.span.end_s))
    return utterances


def reconstruct_recording(
    audio: object,
    vad: VadBackend,
    dia: DiarizationBackend,
    asr: AsrBackend,
    cfg: ReconstructionConfig,
    surgery_id: str = "recording",
) -> list[TranscribedUtterance]:
    """Chunk the recording, reconstruct each chunk, and merge in time order.

    `audio` is an AudioBuffer or any proxy exposing duration_s and
    slice(start_s, end_s). Chunk results are assembled order-independently,
    so concurrent execution cannot change the output.
    """
    plan = chunk_plan(audio.duration_s, cfg.chunk_len_s)
    chunks = [
        AudioChunk(surgery_id, index, start, audio.slice(start, end))
        for index, start, end in plan
    ]
    workers = max(1, min(b.max_in_flight for b in (vad, dia, asr)))
    if workers == 1 or len(chunks) == 1:
        per_chunk = [reconstruct_chunk(c, vad, dia, asr, cfg) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            per_chunk = list(
                pool.map(lambda c: reconstruct_chunk(c, vad, dia, asr, cfg), chunks)
            )
    merged = [u for result in per_chunk for u in result]
    merged.sort(key=lambda u: (u.span.start_s, u.span.end_s, u.segment.chunk_index))
    return merged


def utterance_to_record(utterance: TranscribedUtterance, surgery_id: str) -> dict:
    return {
        "v": 1,
        "surgery_id": surgery_id,
        "chunk_index": utterance.segment.chunk_index,
        "start_s": utterance.span.start_s,
        "end_s": utterance.span.end_s,
        "raw_speaker_label": utterance.segment.raw_speaker_label,
        "mean_vad": utterance.mean_vad,
        "text": utterance.text,
        "asr_runs": list(utterance.asr_runs),
    }


def utterance_from_record(record: dict) -> TranscribedUtterance:
    segment = DiarizedSegment(
        span=TimeSpan(float(record["start_s"]), float(record["end_s"])),
        raw_speaker_label=record["raw_speaker_label"],
        chunk_index=int(record["chunk_index"]),
    )
    return TranscribedUtterance(
        segment=segment,
        text=record["text"],
        mean_vad=float(record["mean_vad"]),
        asr_runs=tuple(record["asr_runs"]),
    )
