"""Clinical tasks: feedback detection, effectiveness prediction, and component
classification via a pluggable text classifier, with tolerant response parsing.

Hosted models drift from the demanded response format despite the templates'
"DO NOT DO ANY OTHER FORMATTING", so the default parser accepts single or
double quotes, surrounding code fences, and case variation in yes/no. Strict
mode insists on a literal map. A response that fails to parse is retried once
before the error surfaces.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

from .backends import TextClassifierBackend
from .dialogue import ContextWindow, DialogueTurn, context_window
from .prompts import (
    TASK_KEYS,
    PromptPayload,
    PromptTask,
    build_prompt,
    render_turn_line,
)


class MalformedResponseError(ValueError):
    """The classifier's raw text could not be parsed into the required keys."""

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(f"malformed classifier response: {message}: {raw!r}")
        self.raw = raw


@dataclass(frozen=True)
class FeedbackPrediction:
    turn_index: int
    is_feedback: bool
    raw_response: str


@dataclass(frozen=True)
class EffectivenessPrediction:
    verbal_ack: bool
    behavioral_change: bool


@dataclass(frozen=True)
class ComponentPrediction:
    anatomic: bool
    procedural: bool
    technical: bool


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*|\s*```$")


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = _FENCE_RE.sub("", text).strip()
    return text


def parse_yes_no_map(
    response: str, required_keys: list[str] | tuple[str, ...], *, strict: bool = False
) -> dict[str, bool]:
    """Extract a {key: yes/no} map from a classifier response.

    Raises MalformedResponseError when a required key is missing or its value
    is outside {yes, no}.
    """
    if not required_keys:
        raise ValueError("required_keys must be non-empty")
    text = _strip_fences(response)
    if strict:
        try:
            literal = ast.literal_eval(text)
        except (ValueError, SyntaxError) as exc:
            raise MalformedResponseError(f"not a literal map ({exc})", response)
        if not isinstance(literal, dict):
            raise MalformedResponseError("not a map", response)
        result = {}
        for key in required_keys:
            if key not in literal:
                raise MalformedResponseError(f"missing key {key!r}", response)
            value = literal[key]
            if value not in ("yes", "no"):
                raise MalformedResponseError(f"value for {key!r} not yes/no", response)
            result[key] = value == "yes"
        return result
    result = {}
    for key in required_keys:
        pattern = re.compile(
            r"['\"]?" + re.escape(key) + r"['\"]?\s*:\s*['\"]?(yes|no)['\"]?",
            re.IGNORECASE,
        )
        match = pattern.search(text)
        if match is None:
            raise MalformedResponseError(f"missing key {key!r} or value not yes/no", response)
        result[key] = match.group(1).lower() == "yes"
    return result


def _classify(
    classifier: TextClassifierBackend,
    payload: PromptPayload,
    *,
    strict: bool = False,
) -> tuple[dict[str, bool], str]:
    """Run the classifier and parse, retrying once on a malformed response."""
    keys = TASK_KEYS[payload.task]
    raw = classifier.complete(payload)
    try:
        return parse_yes_no_map(raw, keys, strict=strict), raw
    except MalformedResponseError:
        raw = classifier.complete(payload)
        return parse_yes_no_map(raw, keys, strict=strict), raw


def classify_feedback(
    dialogue: list[DialogueTurn],
    index: int,
    classifier: TextClassifierBackend,
    k: int = 5,
    *,
    strict: bool = False,
) -> FeedbackPrediction:
    """Task 1: does this turn deliver feedback, given the preceding turns?

    Every turn is scored, whichever role spoke it; trainee and unknown turns
    simply tend to classify negative.
    """
    window = context_window(dialogue, index, k)
    payload = build_prompt(
        PromptTask.DETECT, render_turn_line(window.target), context=window
    )
    try:
        values, raw = _classify(classifier, payload, strict=strict)
    except MalformedResponseError as exc:
        raise MalformedResponseError(f"turn {index}", exc.raw) from exc
    return FeedbackPrediction(turn_index=index, is_feedback=values["feedback"], raw_response=raw)


def predict_effectiveness(
    source: ContextWindow | str,
    classifier: TextClassifierBackend,
    *,
    strict: bool = False,
) -> EffectivenessPrediction:
    """Task 2: predict verbal acknowledgement and behavioral change.

    Pass a ContextWindow for the reconstructed-dialogue variant or a raw
    human-annotation transcript string for the selective-transcription one.
    """
    if isinstance(source, ContextWindow):
        payload = build_prompt(
            PromptTask.EFFECTIVENESS_DIALOGUE,
            render_turn_line(source.target),
            context=source,
        )
    else:
        payload = build_prompt(PromptTask.EFFECTIVENESS_HUMAN, source)
    values, _ = _classify(classifier, payload, strict=strict)
    return EffectivenessPrediction(
        verbal_ack=values["verbal acknowledgement"],
        behavioral_change=values["behavioral change"],
    )


def classify_components(
    source: ContextWindow | str,
    classifier: TextClassifierBackend,
    *,
    strict: bool = False,
) -> ComponentPrediction:
    """Task 3: multi-label anatomic/procedural/technical categorisation."""
    if isinstance(source, ContextWindow):
        payload = build_prompt(
            PromptTask.COMPONENTS_DIALOGUE,
            render_turn_line(source.target),
            context=source,
        )
    else:
        payload = build_prompt(PromptTask.COMPONENTS_HUMAN, source)
    values, _ = _classify(classifier, payload, strict=strict)
    return ComponentPrediction(
        anatomic=values["anatomic"],
        procedural=values["procedural"],
        technical=values["technical"],
    )


def prediction_to_record(
    surgery_id: str, turn_index: int, task: PromptTask, values: dict[str, bool], raw: str
) -> dict:
    return {
        "v": 1,
        "surgery_id": surgery_id,
        "turn_index": turn_index,
        "task": task.value,
        "values": {k: bool(v) for k, v in values.items()},
        "raw_response": raw,
    }
