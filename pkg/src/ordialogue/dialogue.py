"""Role-attributed dialogue assembly, context windows for classification, and
the fixed-window baseline geometry."""

from __future__ import annotations

from dataclasses import dataclass

from .refinement import RoleAttributedUtterance
from .timeline import FrameActivitySeries, TimeSpan, mean_activity, seconds_to_clock

DEFAULT_CONTEXT_TURNS = 5
DEFAULT_WINDOW_LEN_S = 10.0
DEFAULT_WINDOW_OVERLAP_S = 5.0

CLIP_LEAD_S = 3.0  # absorbs annotation-timing imperfection
CLIP_TRAIL_S = 7.0  # captures the delivery that follows the mark


@dataclass(frozen=True)
class DialogueTurn:
    index: int
    role: str  # trainer | trainee | unknown
    span: TimeSpan
    text: str
    timestamp_label: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("turn text must be non-empty")


@dataclass(frozen=True)
class ContextWindow:
    turns: tuple[DialogueTurn, ...]
    target: DialogueTurn


@dataclass(frozen=True)
class FixedWindow:
    span: TimeSpan
    text: str


def assemble_dialogue(utterances: list[RoleAttributedUtterance]) -> list[DialogueTurn]:
    """Map refined utterances 1:1 to indexed turns, dropping empty-text ones.

    Consecutive same-role utterances stay separate turns; the stream often has
    the same speaker back to back when the other side was not picked up.
    """
    speaking = [u for u in utterances if u.text.strip()]
    speaking.sort(key=lambda u: u.span.start_s)  # stable: equal starts keep input order
    return [
        DialogueTurn(
            index=i,
            role=u.role,
            span=u.span,
            text=u.text,
            timestamp_label=seconds_to_clock(u.span.start_s),
        )
        for i, u in enumerate(speaking)
    ]


def context_window(
    dialogue: list[DialogueTurn], target_index: int, k: int = DEFAULT_CONTEXT_TURNS
) -> ContextWindow:
    """The up-to-k turns immediately preceding the target, in order."""
    if not 0 <= target_index < len(dialogue):
        raise IndexError(f"target index {target_index} out of range [0, {len(dialogue)})")
    if k < 0:
        raise ValueError("context length must be non-negative")
    lo = max(0, target_index - k)
    return ContextWindow(turns=tuple(dialogue[lo:target_index]), target=dialogue[target_index])


def extract_fixed_windows(
    total_duration_s: float,
    window_len_s: float = DEFAULT_WINDOW_LEN_S,
    overlap_s: float = DEFAULT_WINDOW_OVERLAP_S,
) -> list[TimeSpan]:
    """Moving-window spans from t=0: fixed length, fixed overlap, last window
    ending within the recording."""
    if not (0 <= overlap_s < window_len_s <= total_duration_s):
        raise ValueError(
            f"invalid geometry: need 0 <= overlap ({overlap_s}) < window ({window_len_s})"
            f" <= duration ({total_duration_s})"
        )
    step = window_len_s - overlap_s
    windows = []
    start = 0.0
    while start + window_len_s <= total_duration_s + 1e-9:
        windows.append(TimeSpan(start, start + window_len_s))
        start += step
    return windows


def fill_fixed_windows(
    windows: list[TimeSpan], utterances: list[RoleAttributedUtterance]
) -> list[FixedWindow]:
    """Concatenate the text of utterances overlapping each window span."""
    filled = []
    for window in windows:
        texts = [
            u.text
            for u in utterances
            if u.text and min(u.span.end_s, window.end_s) - max(u.span.start_s, window.start_s) > 0
        ]
        filled.append(FixedWindow(span=window, text=" ".join(texts)))
    return filled


def extract_training_clip(annotation_time_s: float) -> TimeSpan:
    """Clip spanning [t - 3 s, t + 7 s], clamped at the recording start."""
    if annotation_time_s < 0:
        raise ValueError("annotation time must be non-negative")
    return TimeSpan(max(0.0, annotation_time_s - CLIP_LEAD_S), annotation_time_s + CLIP_TRAIL_S)


def vad_only_predict(
    windows: list[TimeSpan], activity: FrameActivitySeries, gate: float
) -> list[bool]:
    """Baseline detector: a window is positive when its mean activity >= gate."""
    if not 0.0 <= gate <= 1.0:
        raise ValueError("gate must lie in [0, 1]")
    predictions = []
    for window in windows:
        try:
            score = mean_activity(activity, window)
        except ValueError:
            score = 0.0
        predictions.append(score >= gate)
    return predictions


def turn_to_record(turn: DialogueTurn) -> dict:
    return {
        "v": 1,
        "index": turn.index,
        "role": turn.role,
        "start_s": turn.span.start_s,
        "end_s": turn.span.end_s,
        "timestamp_label": turn.timestamp_label,
        "text": turn.text,
    }


def turn_from_record(record: dict) -> DialogueTurn:
    return DialogueTurn(
        index=int(record["index"]),
        role=record["role"],
        span=TimeSpan(float(record["start_s"]), float(record["end_s"])),
        text=record["text"],
        timestamp_label=record["timestamp_label"],
    )
