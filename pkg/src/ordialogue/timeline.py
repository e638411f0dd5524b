"""Time spans, sampled audio, and frame-level voice-activity series.

All times are seconds as 64-bit floats; comparisons that decide whether two
instants coincide use TIME_EPS. Frame i of an activity series covers
[origin_s + i*frame_len_s, origin_s + (i+1)*frame_len_s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

TIME_EPS = 1e-6

TARGET_RATE_HZ = 16_000
DEFAULT_FRAME_LEN_S = 0.01
DEFAULT_CHUNK_LEN_S = 180.0


@dataclass(frozen=True, order=True)
class TimeSpan:
    """A half-open-ish interval [start_s, end_s] with strictly positive duration."""

    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValueError(f"span start must be non-negative, got {self.start_s}")
        if not self.end_s > self.start_s:
            raise ValueError(f"span must have positive duration: [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def shift(self, offset_s: float) -> TimeSpan:
        return TimeSpan(self.start_s + offset_s, self.end_s + offset_s)

    def contains(self, t: float) -> bool:
        """Closed-interval containment (endpoints count)."""
        return self.start_s - TIME_EPS <= t <= self.end_s + TIME_EPS


def intersect(a: TimeSpan, b: TimeSpan) -> TimeSpan | None:
    """Overlap of two spans, or None when the overlap has zero duration."""
    lo = max(a.start_s, b.start_s)
    hi = min(a.end_s, b.end_s)
    if hi - lo <= TIME_EPS:
        return None
    return TimeSpan(lo, hi)


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Linear PCM audio held as a flat float array, interleaved when multichannel."""

    samples: np.ndarray
    sample_rate_hz: int
    channels: int = 1

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if self.channels <= 0:
            raise ValueError(f"channel count must be positive, got {self.channels}")
        if samples.size % self.channels != 0:
            raise ValueError(
                f"sample count {samples.size} not divisible by {self.channels} channels"
            )

    @property
    def frame_count(self) -> int:
        return self.samples.size // self.channels

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.sample_rate_hz

    def frames(self) -> np.ndarray:
        """View as (frame_count, channels)."""
        return self.samples.reshape(-1, self.channels)

    def slice(self, start_s: float, end_s: float) -> AudioBuffer:
        """Sample-aligned sub-buffer; boundaries round to the nearest frame."""
        i0 = int(round(start_s * self.sample_rate_hz))
        i1 = int(round(end_s * self.sample_rate_hz))
        i0 = max(0, min(i0, self.frame_count))
        i1 = max(i0, min(i1, self.frame_count))
        flat = self.frames()[i0:i1].reshape(-1)
        return AudioBuffer(flat, self.sample_rate_hz, self.channels)


@dataclass(frozen=True)
class AudioChunk:
    """One contiguous slice of a recording, addressed by index and offset."""

    surgery_id: str
    chunk_index: int
    offset_s: float
    audio: object  # AudioBuffer or a simulation proxy exposing duration_s

    def __post_init__(self) -> None:
        if self.chunk_index < 0:
            raise ValueError("chunk_index must be non-negative")
        if self.offset_s < 0:
            raise ValueError("offset_s must be non-negative")

    @property
    def span(self) -> TimeSpan:
        return TimeSpan(self.offset_s, self.offset_s + self.audio.duration_s)


@dataclass(frozen=True, eq=False)
class FrameActivitySeries:
    """Per-frame voice-activity values in [0, 1] at a fixed frame length."""

    values: np.ndarray
    frame_len_s: float = DEFAULT_FRAME_LEN_S
    origin_s: float = 0.0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.frame_len_s <= 0:
            raise ValueError("frame length must be positive")
        if self.origin_s < 0:
            raise ValueError("origin must be non-negative")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("activity values must lie in [0, 1]")

    @property
    def frame_count(self) -> int:
        return self.values.size

    @property
    def end_s(self) -> float:
        return self.origin_s + self.frame_count * self.frame_len_s

    @property
    def coverage(self) -> TimeSpan | None:
        if self.frame_count == 0:
            return None
        return TimeSpan(self.origin_s, self.end_s)


def mean_activity(activity: FrameActivitySeries, span: TimeSpan) -> float:
    """Duration-weighted mean activity over the part of `span` the series covers.

    Frames partially inside the span contribute proportionally to their
    overlap. Raises ValueError when the span is disjoint from the series.
    """
    lo = max(span.start_s, activity.origin_s)
    hi = min(span.end_s, activity.end_s)
    if hi - lo <= TIME_EPS:
        raise ValueError(
            f"no coverage: span [{span.start_s}, {span.end_s}] is outside "
            f"series [{activity.origin_s}, {activity.end_s}]"
        )
    f = activity.frame_len_s
    i0 = int(math.floor((lo - activity.origin_s) / f + TIME_EPS))
    i1 = int(math.ceil((hi - activity.origin_s) / f - TIME_EPS))
    i0 = max(0, i0)
    i1 = min(activity.frame_count, max(i1, i0 + 1))
    idx = np.arange(i0, i1)
    starts = activity.origin_s + idx * f
    weights = np.minimum(starts + f, hi) - np.maximum(starts, lo)
    weights = np.clip(weights, 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise ValueError("no coverage: zero overlap weight")
    value = float(np.dot(weights, activity.values[i0:i1]) / total)
    return min(1.0, max(0.0, value))


def chunk_plan(total_duration_s: float, chunk_len_s: float) -> list[tuple[int, float, float]]:
    """(index, start_s, end_s) triples partitioning [0, total_duration_s]."""
    if chunk_len_s <= 0:
        raise ValueError("invalid chunk length")
    if total_duration_s <= 0:
        raise ValueError("empty input")
    plan = []
    index = 0
    while True:
        start = index * chunk_len_s
        if start >= total_duration_s - TIME_EPS:
            break
        end = min(start + chunk_len_s, total_duration_s)
        plan.append((index, start, end))
        index += 1
    return plan


def chunk_audio(
    audio: AudioBuffer, chunk_len_s: float, surgery_id: str = "recording"
) -> list[AudioChunk]:
    """Split a buffer into contiguous chunks; the last may be shorter.

    Concatenating the chunk buffers reproduces the input sample-for-sample.
    Boundaries round to the nearest sample independently (no cumulative
    drift), so non-last chunks share one duration whenever chunk_len_s is
    sample-aligned, and differ by at most one sample otherwise.
    """
    if chunk_len_s <= 0:
        raise ValueError("invalid chunk length")
    if audio.frame_count == 0:
        raise ValueError("empty input")
    rate = audio.sample_rate_hz
    frames = audio.frames()
    chunks = []
    for index, start_s, end_s in chunk_plan(audio.duration_s, chunk_len_s):
        i0 = int(round(start_s * rate))
        i1 = int(round(end_s * rate))
        i1 = min(i1, audio.frame_count)
        part = AudioBuffer(frames[i0:i1].reshape(-1), rate, audio.channels)
        chunks.append(AudioChunk(surgery_id, index, index * chunk_len_s, part))
    return chunks


def resample_to_mono_16k(audio: AudioBuffer) -> AudioBuffer:
    """Downmix to mono (channel mean) and polyphase-resample to 16 kHz.

    The resampler output is divided by its response to an all-ones signal so a
    constant input maps to the same constant, edges included. Already-16k mono
    input is returned unchanged.
    """
    if audio.sample_rate_hz <= 0:
        raise ValueError("unsupported source rate")
    if audio.frame_count == 0:
        raise ValueError("empty input")
    if audio.sample_rate_hz == TARGET_RATE_HZ and audio.channels == 1:
        return audio
    mono = audio.frames().mean(axis=1) if audio.channels > 1 else audio.samples
    if audio.sample_rate_hz == TARGET_RATE_HZ:
        return AudioBuffer(mono, TARGET_RATE_HZ, 1)
    ratio = Fraction(TARGET_RATE_HZ, audio.sample_rate_hz)
    up, down = ratio.numerator, ratio.denominator
    out = resample_poly(mono, up, down, padtype="line")
    # Unity-DC normalisation: per-sample gain measured on an all-ones input.
    gain = resample_poly(np.ones_like(mono), up, down, padtype="line")
    out = out / gain
    return AudioBuffer(out, TARGET_RATE_HZ, 1)


def seconds_to_clock(seconds: float) -> str:
    """Render seconds from recording start as HH:MM:SS (floor to whole seconds)."""
    if seconds < 0:
        raise ValueError("negative time")
    total = int(seconds)
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"
