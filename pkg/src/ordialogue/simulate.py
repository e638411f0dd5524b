"""Deterministic surgery simulation: scripted dialogue scenarios, simulated
VAD/diarization/ASR/embedding/classifier backends, and ground-truth fixtures.

Every simulated backend is a pure function of (scenario, request): seeds are
derived from the scenario seed plus stable integer tags, never from call
order, so repeated runs are byte-identical. "Audio" is a proxy carrying a
scenario reference and a window; no waveforms are synthesised.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .backends import (
    AsrBackend,
    BackendDescriptor,
    DiarizationBackend,
    EmbeddingBackend,
    TextClassifierBackend,
    VadBackend,
)
from .evaluation import FeedbackAnnotation, token_overlap_aligner
from .prompts import PromptPayload, PromptTask, format_yes_no_map
from .reconstruction import DiarizedSegment
from .refinement import AnchorSpec
from .timeline import DEFAULT_FRAME_LEN_S, AudioChunk, FrameActivitySeries, TimeSpan

# Seed-stream tags (arbitrary but fixed).
_TAG_BASIS = 11
_TAG_PERTURB = 12
_TAG_NOISE = 13
_TAG_SPURIOUS = 14
_TAG_FILLER = 15
_TAG_SCRIPT = 16
_TAG_LABELS = 17

FILLER_TEXTS = ("Thank you.", "Yeah.", "Okay.", "Thanks.", "Bye.", "good")

PERTURBATION_SCALE = 0.15  # keeps worst-case spurious similarity below 0.2


@dataclass(frozen=True)
class ScriptedEvent:
    """One scripted utterance with its ground-truth labels."""

    time_s: float
    role: str  # trainer | trainee
    text: str
    duration_s: float = 4.0
    is_feedback: bool = False
    anatomic: bool = False
    procedural: bool = False
    technical: bool = False
    behavioral_adjustment: bool = False
    verbal_acknowledgment: bool = False

    @property
    def span(self) -> TimeSpan:
        return TimeSpan(self.time_s, self.time_s + self.duration_s)


@dataclass(frozen=True)
class SurgeryScenario:
    surgery_id: str
    seed: int
    duration_s: float
    events: tuple[ScriptedEvent, ...]
    hallucination_rate: float = 0.0
    noise_spans: tuple[TimeSpan, ...] = ()
    embedding_dim: int = 32
    cross_role_leakage: float = 0.0  # "hard mode" bleed between the role clusters

    def __post_init__(self) -> None:
        if not 0.0 <= self.hallucination_rate <= 1.0:
            raise ValueError("hallucination rate must lie in [0, 1]")
        if not 0.0 <= self.cross_role_leakage < 1.0:
            raise ValueError("cross-role leakage must lie in [0, 1)")
        if self.embedding_dim < 4:
            raise ValueError("embedding dim must be at least 4")
        times = [e.time_s for e in self.events]
        if times != sorted(times):
            raise ValueError("scripted events must be ordered by time")
        for event in self.events:
            if event.span.end_s > self.duration_s:
                raise ValueError(
                    f"event at {event.time_s}s ends beyond the {self.duration_s}s recording"
                )
        for span in self.noise_spans:
            if span.end_s > self.duration_s:
                raise ValueError("noise span ends beyond the recording")


@dataclass(frozen=True)
class ScenarioAudio:
    """Audio stand-in: a window of a scenario's virtual recording."""

    scenario: SurgeryScenario
    start_s: float = 0.0
    end_s: float | None = None

    def __post_init__(self) -> None:
        if self.end_s is None:
            object.__setattr__(self, "end_s", self.scenario.duration_s)

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def slice(self, start_s: float, end_s: float) -> ScenarioAudio:
        lo = self.start_s + start_s
        hi = min(self.start_s + end_s, self.end_s)
        return ScenarioAudio(self.scenario, lo, hi)


def _rng(scenario: SurgeryScenario, tag: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([scenario.seed, tag, *extra]))


def _span_key(span: TimeSpan) -> int:
    return int(round(span.start_s * 100))


def spurious_segment_spans(scenario: SurgeryScenario) -> tuple[TimeSpan, ...]:
    """Noise spans the simulated diarizer will surface as spurious segments.

    One Bernoulli(hallucination_rate) draw per noise span, seeded per span.
    """
    spans = []
    for i, span in enumerate(scenario.noise_spans):
        if _rng(scenario, _TAG_SPURIOUS, i).random() < scenario.hallucination_rate:
            spans.append(span)
    return tuple(spans)


def _role_centers(scenario: SurgeryScenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal basis: trainer centre, trainee centre, and the tail
    subspace used for perturbations and noise embeddings."""
    dim = scenario.embedding_dim
    raw = _rng(scenario, _TAG_BASIS).standard_normal((dim, dim))
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))  # sign-fix so QR is deterministic across BLAS
    return q[:, 0], q[:, 1], q[:, 2:]


def _tail_unit(scenario: SurgeryScenario, tag: int, key: int, tail: np.ndarray) -> np.ndarray:
    coeffs = _rng(scenario, tag, key).standard_normal(tail.shape[1])
    coeffs /= np.linalg.norm(coeffs)
    return tail @ coeffs


class SimulatedVad(VadBackend):
    """Activity 1.0 inside scripted speech and noise spans, 0 elsewhere."""

    def __init__(self, scenario: SurgeryScenario) -> None:
        self._scenario = scenario
        self._descriptor = BackendDescriptor(kind="vad", id="sim-vad", max_in_flight=8)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def activity(self, chunk: AudioChunk) -> FrameActivitySeries:
        frame = DEFAULT_FRAME_LEN_S
        count = int(round(chunk.audio.duration_s / frame))
        mids = chunk.offset_s + (np.arange(count) + 0.5) * frame
        values = np.zeros(count)
        spans = [e.span for e in self._scenario.events] + list(self._scenario.noise_spans)
        for span in spans:
            values[(mids >= span.start_s) & (mids < span.end_s)] = 1.0
        return FrameActivitySeries(values=values, frame_len_s=frame, origin_s=chunk.offset_s)


class SimulatedDiarizer(DiarizationBackend):
    """Scripted spans with anonymous per-chunk labels, plus spurious segments
    over noise according to the scenario's hallucination plan."""

    def __init__(self, scenario: SurgeryScenario) -> None:
        self._scenario = scenario
        self._spurious = spurious_segment_spans(scenario)
        self._descriptor = BackendDescriptor(kind="dia", id="sim-dia", max_in_flight=8)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def diarize(self, chunk: AudioChunk) -> list[DiarizedSegment]:
        chunk_start = chunk.offset_s
        chunk_end = chunk.offset_s + chunk.audio.duration_s
        entries: list[tuple[TimeSpan, str]] = []
        for event in self._scenario.events:
            if chunk_start <= event.time_s < chunk_end:
                span = TimeSpan(event.time_s, min(event.span.end_s, chunk_end))
                entries.append((span, event.role))
        for span in self._spurious:
            if chunk_start <= span.start_s < chunk_end:
                entries.append((TimeSpan(span.start_s, min(span.end_s, chunk_end)), "noise"))
        entries.sort(key=lambda item: item[0].start_s)
        label_of: dict[str, int] = {}
        segments = []
        for span, voice in entries:
            label_of.setdefault(voice, len(label_of))
            segments.append(
                DiarizedSegment(
                    span=span,
                    raw_speaker_label=f"SPEAKER {label_of[voice]}",
                    chunk_index=chunk.chunk_index,
                )
            )
        return segments


class SimulatedAsr(AsrBackend):
    """Scripted text for scripted spans; short filler text, varying across
    run indices, for spurious segments so the double-run detector fires."""

    def __init__(self, scenario: SurgeryScenario) -> None:
        self._scenario = scenario
        self._by_start = {_span_key(e.span): e for e in scenario.events}
        self._spurious = {_span_key(s) for s in spurious_segment_spans(scenario)}
        self._descriptor = BackendDescriptor(kind="asr", id="sim-asr", max_in_flight=8)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def transcribe(self, chunk: AudioChunk, span: TimeSpan, run_index: int = 0) -> str:
        key = _span_key(span)
        event = self._by_start.get(key)
        if event is not None:
            return event.text
        if key in self._spurious:
            base = int(_rng(self._scenario, _TAG_FILLER, key).integers(len(FILLER_TEXTS)))
            return FILLER_TEXTS[(base + run_index) % len(FILLER_TEXTS)]
        return ""


class SimulatedEmbedder(EmbeddingBackend):
    """Role cluster centre plus a seeded tail-space perturbation for scripted
    speech; a tail-space (centre-orthogonal) noise vector for anything else."""

    def __init__(self, scenario: SurgeryScenario) -> None:
        self._scenario = scenario
        self._trainer, self._trainee, self._tail = _role_centers(scenario)
        self._by_start = {_span_key(e.span): e for e in scenario.events}
        self._descriptor = BackendDescriptor(kind="embed", id="sim-embed", max_in_flight=8)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    @property
    def dim(self) -> int:
        return self._scenario.embedding_dim

    def embed(self, source: object, span: TimeSpan) -> np.ndarray:
        key = _span_key(span)
        event = self._by_start.get(key)
        if event is None:
            return _tail_unit(self._scenario, _TAG_NOISE, key, self._tail)
        own, other = (
            (self._trainer, self._trainee)
            if event.role == "trainer"
            else (self._trainee, self._trainer)
        )
        perturb = _tail_unit(self._scenario, _TAG_PERTURB, key, self._tail)
        return own + self._scenario.cross_role_leakage * other + PERTURBATION_SCALE * perturb


_QUOTED_RE = re.compile(r'"(.*)"', re.DOTALL)

_PHRASE_PATTERNS = {
    PromptTask.DETECT: re.compile(r"Phrase:\n\n(.*?)\n\nFor example:", re.DOTALL),
    PromptTask.EFFECTIVENESS_DIALOGUE: re.compile(
        r"Phrase:\n(.*?)\n\nFormat your response", re.DOTALL
    ),
    PromptTask.COMPONENTS_DIALOGUE: re.compile(
        r"Phrase:\n(.*?)\n\nFormat your response", re.DOTALL
    ),
    PromptTask.EFFECTIVENESS_HUMAN: re.compile(
        r"Feedback:\n(.*?)\n\nFormat your response", re.DOTALL
    ),
    PromptTask.COMPONENTS_HUMAN: re.compile(
        r"Feedback:\n(.*?)\n\nFormat your response", re.DOTALL
    ),
}

_ALIGN_RE = re.compile(r"String 1:\n\n(.*?)\n\nString 2:\n\n(.*)\Z", re.DOTALL)


class ScriptedClassifier(TextClassifierBackend):
    """Echoes the scenario's ground-truth labels back through the prompt
    contract.

    Phrases absent from the script (hallucination filler such as "Thank
    you.") read as praise to a text-only classifier, so detection calls them
    feedback by default; that is exactly the failure mode the refinement stage
    exists to remove. Alignment queries use the offline token-overlap check.
    """

    def __init__(self, scenario: SurgeryScenario, unknown_is_feedback: bool = True) -> None:
        self._scenario = scenario
        self._unknown_is_feedback = unknown_is_feedback
        self._by_text = {e.text: e for e in scenario.events}
        self._descriptor = BackendDescriptor(
            kind="classify",
            id="sim-classifier",
            max_in_flight=8,
            config={"model": "scripted-echo", "temperature": 0.0},
        )

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def _phrase_text(self, payload: PromptPayload) -> str:
        match = _PHRASE_PATTERNS[payload.task].search(payload.user_text)
        if match is None:
            raise ValueError(f"cannot locate phrase in {payload.task.value} prompt")
        phrase = match.group(1)
        if payload.task in (PromptTask.EFFECTIVENESS_HUMAN, PromptTask.COMPONENTS_HUMAN):
            return phrase
        quoted = _QUOTED_RE.search(phrase)
        return quoted.group(1) if quoted else phrase

    def complete(self, payload: PromptPayload) -> str:
        task = payload.task
        if task is PromptTask.ALIGN:
            match = _ALIGN_RE.search(payload.user_text)
            if match is None:
                raise ValueError("cannot locate strings in alignment prompt")
            aligned = token_overlap_aligner(match.group(1), match.group(2))
            return format_yes_no_map(task, {"alignment": aligned})
        event = self._by_text.get(self._phrase_text(payload))
        if task is PromptTask.DETECT:
            is_feedback = event.is_feedback if event else self._unknown_is_feedback
            return format_yes_no_map(task, {"feedback": is_feedback})
        if task in (PromptTask.EFFECTIVENESS_DIALOGUE, PromptTask.EFFECTIVENESS_HUMAN):
            return format_yes_no_map(
                task,
                {
                    "verbal acknowledgement": bool(event and event.verbal_acknowledgment),
                    "behavioral change": bool(event and event.behavioral_adjustment),
                },
            )
        return format_yes_no_map(
            task,
            {
                "anatomic": bool(event and event.anatomic),
                "procedural": bool(event and event.procedural),
                "technical": bool(event and event.technical),
            },
        )


@dataclass(frozen=True)
class SimulatedSurgery:
    scenario: SurgeryScenario
    audio: ScenarioAudio
    vad: SimulatedVad
    dia: SimulatedDiarizer
    asr: SimulatedAsr
    embedder: SimulatedEmbedder
    classifier: ScriptedClassifier
    annotations: tuple[FeedbackAnnotation, ...]
    spurious_spans: tuple[TimeSpan, ...]


def ground_truth_annotations(scenario: SurgeryScenario) -> tuple[FeedbackAnnotation, ...]:
    return tuple(
        FeedbackAnnotation(
            surgery_id=scenario.surgery_id,
            time_s=event.time_s,
            transcript=event.text,
            anatomic=event.anatomic,
            procedural=event.procedural,
            technical=event.technical,
            behavioral_adjustment=event.behavioral_adjustment,
            verbal_acknowledgment=event.verbal_acknowledgment,
        )
        for event in scenario.events
        if event.is_feedback
    )


def simulate_surgery(scenario: SurgeryScenario) -> SimulatedSurgery:
    """Bundle the audio proxy, the full simulated backend set, and ground truth."""
    return SimulatedSurgery(
        scenario=scenario,
        audio=ScenarioAudio(scenario),
        vad=SimulatedVad(scenario),
        dia=SimulatedDiarizer(scenario),
        asr=SimulatedAsr(scenario),
        embedder=SimulatedEmbedder(scenario),
        classifier=ScriptedClassifier(scenario),
        annotations=ground_truth_annotations(scenario),
        spurious_spans=spurious_segment_spans(scenario),
    )


def anchor_specs_for_scenario(
    scenario: SurgeryScenario, per_role: int = 5
) -> list[AnchorSpec]:
    """Anchor spans over the virtual recording: the first clean scripted
    utterances of each role."""
    specs = []
    for role in ("trainer", "trainee"):
        events = [e for e in scenario.events if e.role == role][:per_role]
        if len(events) < per_role:
            raise ValueError(f"scenario has only {len(events)} {role} events; need {per_role}")
        for i, event in enumerate(events):
            specs.append(
                AnchorSpec(
                    role=role,
                    recording=scenario.surgery_id,
                    start_s=event.span.start_s,
                    end_s=event.span.end_s,
                    label=f"{role} anchor {i + 1}",
                )
            )
    return specs


# ---------------------------------------------------------------------------
# Scenario generation and (de)serialisation
# ---------------------------------------------------------------------------

_TRAINER_FEEDBACK_LINES = (
    "Stay in that plane between the fascial layers",
    "Buzz it right there before you go further",
    "Open up the lateral side before you dig deeper",
    "You can switch to the left side now",
    "Keep a little more tension on that suture",
    "Follow the contour of the prostate there",
    "Take smaller bites with the needle",
    "Drop the bladder a bit more before the next step",
    "Watch the vessel right under your instrument",
    "Angle the scissors towards the apex",
)

_TRAINER_CHATTER_LINES = (
    "Can we get the lights adjusted please",
    "The schedule moved the next case to noon",
    "That conference talk last week was interesting",
    "Let's have irrigation ready in a minute",
)

_TRAINEE_LINES = (
    "Okay, I see it now",
    "Got it, switching sides",
    "Sorry, I wasn't aware of that",
    "Yes, doing that now",
    "Understood, keeping tension",
)


def make_scenario(
    surgery_id: str = "sim-001",
    seed: int = 7,
    n_events: int = 60,
    feedback_fraction: float = 0.45,
    hallucination_rate: float = 0.0,
    n_noise_spans: int = 0,
    cross_role_leakage: float = 0.0,
    embedding_dim: int = 32,
) -> SurgeryScenario:
    """Generate a deterministic scripted surgery.

    Texts carry a unique cue suffix so transcript lookup and alignment are
    unambiguous. Events never straddle 3-minute chunk boundaries and noise
    spans sit strictly inside the gaps between events.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_SCRIPT]))
    label_rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_LABELS]))
    events = []
    t = 6.0
    for i in range(n_events):
        duration = float(np.round(rng.uniform(2.5, 5.0), 2))
        # keep each event inside one 3-minute chunk
        if math.floor(t / 180.0) != math.floor((t + duration) / 180.0):
            t = (math.floor(t / 180.0) + 1) * 180.0 + 1.0
        is_feedback = bool(rng.random() < feedback_fraction)
        if is_feedback:
            role = "trainer"
            base = _TRAINER_FEEDBACK_LINES[int(rng.integers(len(_TRAINER_FEEDBACK_LINES)))]
            anatomic = bool(label_rng.random() < 0.30)
            procedural = bool(label_rng.random() < 0.25)
            technical = bool(label_rng.random() < 0.80)
            if not (anatomic or procedural or technical):
                technical = True
            labels = {
                "anatomic": anatomic,
                "procedural": procedural,
                "technical": technical,
                "behavioral_adjustment": bool(label_rng.random() < 0.55),
                "verbal_acknowledgment": bool(label_rng.random() < 0.50),
            }
        else:
            if rng.random() < 0.5:
                role = "trainee"
                base = _TRAINEE_LINES[int(rng.integers(len(_TRAINEE_LINES)))]
            else:
                role = "trainer"
                base = _TRAINER_CHATTER_LINES[int(rng.integers(len(_TRAINER_CHATTER_LINES)))]
            labels = {}
        events.append(
            ScriptedEvent(
                time_s=float(np.round(t, 2)),
                role=role,
                text=f"{base} (cue {i:03d}).",
                duration_s=duration,
                is_feedback=is_feedback,
                **labels,
            )
        )
        t += duration + float(np.round(rng.uniform(8.0, 16.0), 2))

    duration_s = math.ceil((events[-1].span.end_s + 12.0) / 30.0) * 30.0

    noise_spans = []
    if n_noise_spans:
        gaps = []
        for prev, nxt in zip(events, events[1:]):
            lo = prev.span.end_s + 1.5
            hi = nxt.time_s - 1.5
            if hi - lo >= 3.0:
                gaps.append((hi - lo, lo, hi))
        gaps.sort(reverse=True)
        if len(gaps) < n_noise_spans:
            raise ValueError(f"only {len(gaps)} usable gaps for {n_noise_spans} noise spans")
        chosen = sorted(gaps[:n_noise_spans], key=lambda g: g[1])
        for _, lo, hi in chosen:
            center = (lo + hi) / 2.0
            half = min(1.25, (hi - lo) / 2.0 - 0.25)
            noise_spans.append(
                TimeSpan(float(np.round(center - half, 2)), float(np.round(center + half, 2)))
            )

    return SurgeryScenario(
        surgery_id=surgery_id,
        seed=seed,
        duration_s=float(duration_s),
        events=tuple(events),
        hallucination_rate=hallucination_rate,
        noise_spans=tuple(noise_spans),
        embedding_dim=embedding_dim,
        cross_role_leakage=cross_role_leakage,
    )


def scenario_to_dict(scenario: SurgeryScenario) -> dict:
    return {
        "v": 1,
        "surgery_id": scenario.surgery_id,
        "seed": scenario.seed,
        "duration_s": scenario.duration_s,
        "hallucination_rate": scenario.hallucination_rate,
        "embedding_dim": scenario.embedding_dim,
        "cross_role_leakage": scenario.cross_role_leakage,
        "noise_spans": [[s.start_s, s.end_s] for s in scenario.noise_spans],
        "events": [
            {
                "time_s": e.time_s,
                "role": e.role,
                "text": e.text,
                "duration_s": e.duration_s,
                "is_feedback": e.is_feedback,
                "anatomic": e.anatomic,
                "procedural": e.procedural,
                "technical": e.technical,
                "behavioral_adjustment": e.behavioral_adjustment,
                "verbal_acknowledgment": e.verbal_acknowledgment,
            }
            for e in scenario.events
        ],
    }


def scenario_from_dict(doc: dict) -> SurgeryScenario:
    return SurgeryScenario(
        surgery_id=doc["surgery_id"],
        seed=int(doc["seed"]),
        duration_s=float(doc["duration_s"]),
        events=tuple(
            ScriptedEvent(
                time_s=float(e["time_s"]),
                role=e["role"],
                text=e["text"],
                duration_s=float(e["duration_s"]),
                is_feedback=bool(e["is_feedback"]),
                anatomic=bool(e.get("anatomic", False)),
                procedural=bool(e.get("procedural", False)),
                technical=bool(e.get("technical", False)),
                behavioral_adjustment=bool(e.get("behavioral_adjustment", False)),
                verbal_acknowledgment=bool(e.get("verbal_acknowledgment", False)),
            )
            for e in doc["events"]
        ),
        hallucination_rate=float(doc.get("hallucination_rate", 0.0)),
        noise_spans=tuple(TimeSpan(float(a), float(b)) for a, b in doc.get("noise_spans", [])),
        embedding_dim=int(doc.get("embedding_dim", 32)),
        cross_role_leakage=float(doc.get("cross_role_leakage", 0.0)),
    )


def save_scenario(path: str | os.PathLike, scenario: SurgeryScenario) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str | os.PathLike) -> SurgeryScenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))
