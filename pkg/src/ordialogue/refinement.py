"""Stage 2: anchor-profile speaker identification and hallucination removal.

Each utterance's voice embedding is compared against per-role anchor profiles
by mean cosine similarity. Segments below the similarity threshold for both
roles are dropped as hallucinations (or other speakers); survivors are
attributed to the higher-scoring role. Also provides the double-ASR-run
hallucination baseline and the threshold sweep used to pick the cutoff.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .backends import BackendError, EmbeddingBackend
from .reconstruction import TranscribedUtterance
from .timeline import TimeSpan

ROLE_TRAINER = "trainer"
ROLE_TRAINEE = "trainee"
OUTCOME_HALLUCINATION = "hallucination"
OUTCOME_UNKNOWN = "unknown"

DEFAULT_SIMILARITY_THRESHOLD = 0.2
DEFAULT_MIN_ANCHORS = 5
DEFAULT_SWEEP_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)

_TIE_EPS = 1e-9
_NORM_EPS = 1e-12


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu <= _NORM_EPS or nv <= _NORM_EPS:
        raise ValueError("degenerate embedding: zero norm")
    value = float(np.dot(u, v) / (nu * nv))
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class SpeakerAnchor:
    """A manually chosen clean voice sample of a known speaker, embedded."""

    role: str
    span: TimeSpan
    source_recording: str
    embedding: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        if self.role not in (ROLE_TRAINER, ROLE_TRAINEE):
            raise ValueError(f"anchor role must be trainer or trainee, got {self.role!r}")
        emb = np.asarray(self.embedding, dtype=np.float64).reshape(-1)
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class AnchorProfile:
    role: str
    anchors: tuple[SpeakerAnchor, ...]

    @property
    def dim(self) -> int:
        return self.anchors[0].embedding.size


def build_anchor_profile(
    role: str,
    anchors: list[SpeakerAnchor],
    *,
    min_anchors: int = DEFAULT_MIN_ANCHORS,
    allow_fewer: bool = False,
) -> AnchorProfile:
    """Validate and freeze a per-role anchor set (>= min_anchors unless overridden)."""
    if not anchors:
        raise ValueError(f"no anchors for role {role!r}")
    if any(a.role != role for a in anchors):
        raise ValueError("all anchors in a profile must share its role")
    dims = {a.embedding.size for a in anchors}
    if len(dims) != 1:
        raise ValueError(f"anchor embedding dimensions differ: {sorted(dims)}")
    if len(anchors) < min_anchors and not allow_fewer:
        raise ValueError(
            f"{role} profile has {len(anchors)} anchors; at least {min_anchors} required "
            "(pass allow_fewer to override)"
        )
    return AnchorProfile(role=role, anchors=tuple(anchors))


def role_similarity(seg_embedding: np.ndarray, profile: AnchorProfile) -> float:
    """Mean cosine similarity of an embedding against every anchor of a profile."""
    if not profile.anchors:
        raise ValueError("empty anchor profile")
    sims = [cosine_similarity(seg_embedding, a.embedding) for a in profile.anchors]
    return float(np.mean(sims))


@dataclass(frozen=True)
class RoleDecision:
    sim_trainer: float
    sim_trainee: float
    outcome: str  # trainer | trainee | hallucination | unknown


def classify_speaker(
    seg_embedding: np.ndarray,
    trainer: AnchorProfile,
    trainee: AnchorProfile,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> RoleDecision:
    """Hallucination when both mean similarities fall strictly below the
    threshold; otherwise the higher-similarity role, with exact ties flagged
    unknown for review."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    sim_trainer = role_similarity(seg_embedding, trainer)
    sim_trainee = role_similarity(seg_embedding, trainee)
    if sim_trainer < threshold and sim_trainee < threshold:
        outcome = OUTCOME_HALLUCINATION
    elif abs(sim_trainer - sim_trainee) <= _TIE_EPS:
        outcome = OUTCOME_UNKNOWN
    elif sim_trainer > sim_trainee:
        outcome = ROLE_TRAINER
    else:
        outcome = ROLE_TRAINEE
    return RoleDecision(sim_trainer=sim_trainer, sim_trainee=sim_trainee, outcome=outcome)


@dataclass(frozen=True)
class RoleAttributedUtterance:
    utterance: TranscribedUtterance
    decision: RoleDecision

    @property
    def role(self) -> str:
        return self.decision.outcome

    @property
    def span(self) -> TimeSpan:
        return self.utterance.span

    @property
    def text(self) -> str:
        return self.utterance.text


@dataclass(frozen=True)
class RefinementResult:
    kept: tuple[RoleAttributedUtterance, ...]
    removed: tuple[RoleAttributedUtterance, ...]


def refine_utterances(
    utterances: list[TranscribedUtterance],
    source: object,
    trainer: AnchorProfile,
    trainee: AnchorProfile,
    embedder: EmbeddingBackend,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> RefinementResult:
    """Classify every utterance's speaker; drop hallucinations, keep the rest.

    Empty-text utterances are still classified (the decision is driven by
    audio, not text). Input order is preserved on both sides of the split.
    """
    kept: list[RoleAttributedUtterance] = []
    removed: list[RoleAttributedUtterance] = []
    for utterance in utterances:
        try:
            embedding = embedder.embed(source, utterance.span)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(
                "embed",
                f"segment [{utterance.span.start_s:.2f}, {utterance.span.end_s:.2f}]: {exc}",
            ) from exc
        decision = classify_speaker(embedding, trainer, trainee, threshold)
        attributed = RoleAttributedUtterance(utterance=utterance, decision=decision)
        if decision.outcome == OUTCOME_HALLUCINATION:
            removed.append(attributed)
        else:
            kept.append(attributed)
    return RefinementResult(kept=tuple(kept), removed=tuple(removed))


def _normalize_run_text(text: str) -> str:
    # Whitespace only: trim the ends, collapse internal runs. Case and
    # punctuation stay significant.
    return " ".join(text.split())


def detect_trivial_hallucination(utterance: TranscribedUtterance) -> bool:
    """Double-ASR-run baseline: differing transcriptions mark a hallucination."""
    if len(utterance.asr_runs) < 2:
        raise ValueError("insufficient runs: need at least 2 ASR runs")
    normalized = {_normalize_run_text(run) for run in utterance.asr_runs}
    return len(normalized) > 1


def precision_leaning_mean(p: float, r: float) -> float:
    """Threshold-selection score weighting precision over recall: 2p + r/2."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= r <= 1.0:
        raise ValueError("precision and recall must lie in [0, 1]")
    return 2.0 * p + r / 2.0


@dataclass(frozen=True)
class ThresholdSweepRow:
    threshold: float
    precision: float | None
    recall: float | None
    plm: float | None
    note: str | None = None


def sweep_similarity_threshold(
    labeled: list[tuple[tuple[float, float], bool]],
    thresholds: tuple[float, ...] = DEFAULT_SWEEP_GRID,
) -> list[ThresholdSweepRow]:
    """Precision/recall of the flagged-as-hallucination decision per threshold.

    `labeled` pairs (sim_trainer, sim_trainee) with a ground-truth
    is-hallucination label (typically from the double-run detector).
    """
    positives = sum(1 for _, is_hall in labeled if is_hall)
    rows = []
    for threshold in thresholds:
        flagged = [
            ((st, se), is_hall)
            for (st, se), is_hall in labeled
            if st < threshold and se < threshold
        ]
        tp = sum(1 for _, is_hall in flagged if is_hall)
        if positives == 0:
            rows.append(
                ThresholdSweepRow(threshold, None, None, None, note="no positive labels")
            )
            continue
        recall = tp / positives
        if not flagged:
            rows.append(
                ThresholdSweepRow(threshold, None, recall, None, note="nothing flagged")
            )
            continue
        precision = tp / len(flagged)
        rows.append(
            ThresholdSweepRow(threshold, precision, recall, precision_leaning_mean(precision, recall))
        )
    return rows


# ---------------------------------------------------------------------------
# Anchor persistence and the embedding cache
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnchorSpec:
    """An anchor as persisted: a span of a recording, not yet embedded."""

    role: str
    recording: str
    start_s: float
    end_s: float
    label: str = ""

    @property
    def span(self) -> TimeSpan:
        return TimeSpan(self.start_s, self.end_s)


def save_anchor_specs(path: str | os.PathLike, specs: list[AnchorSpec]) -> None:
    doc = [
        {
            "role": s.role,
            "recording": s.recording,
            "start_s": s.start_s,
            "end_s": s.end_s,
            "label": s.label,
        }
        for s in specs
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_anchor_specs(path: str | os.PathLike) -> list[AnchorSpec]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [
        AnchorSpec(
            role=item["role"],
            recording=item["recording"],
            start_s=float(item["start_s"]),
            end_s=float(item["end_s"]),
            label=item.get("label", ""),
        )
        for item in doc
    ]


def embedding_cache_key(recording: str, span: TimeSpan, backend_id: str) -> str:
    raw = f"{recording}|{span.start_s:.6f}|{span.end_s:.6f}|{backend_id}"
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


class EmbeddingCache:
    """Content-hash-keyed embedding store in a single sidecar binary file.

    Layout: 8-byte big-endian header length, JSON index mapping key ->
    [offset, count] into the float64 little-endian payload that follows.
    Rewritten wholesale on save; entries are written in sorted key order so
    identical contents produce identical bytes.
    """

    def __init__(self, path: str | os.PathLike) -> None:
        self._path = os.fspath(path)
        self._entries: dict[str, np.ndarray] = {}
        if os.path.exists(self._path):
            self._load()

    def _load(self) -> None:
        with open(self._path, "rb") as fh:
            header_len = struct.unpack(">Q", fh.read(8))[0]
            index = json.loads(fh.read(header_len).decode("utf-8"))
            payload = fh.read()
        for key, (offset, count) in index.items():
            vec = np.frombuffer(payload, dtype="<f8", count=count, offset=offset * 8)
            self._entries[key] = vec.copy()

    def save(self) -> None:
        index = {}
        parts = []
        offset = 0
        for key in sorted(self._entries):
            vec = np.ascontiguousarray(self._entries[key], dtype="<f8")
            index[key] = [offset, int(vec.size)]
            parts.append(vec.tobytes())
            offset += vec.size
        header = json.dumps(index, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(self._path, "wb") as fh:
            fh.write(struct.pack(">Q", len(header)))
            fh.write(header)
            fh.write(b"".join(parts))

    def get(self, key: str) -> np.ndarray | None:
        return self._entries.get(key)

    def put(self, key: str, embedding: np.ndarray) -> None:
        self._entries[key] = np.asarray(embedding, dtype=np.float64).reshape(-1)

    def __len__(self) -> int:
        return len(self._entries)


def embed_anchor_specs(
    specs: list[AnchorSpec],
    source: object,
    embedder: EmbeddingBackend,
    cache: EmbeddingCache | None = None,
) -> list[SpeakerAnchor]:
    """Embed persisted anchors, reusing cached vectors keyed by content hash."""
    anchors = []
    for spec in specs:
        key = embedding_cache_key(spec.recording, spec.span, embedder.descriptor.id)
        embedding = cache.get(key) if cache is not None else None
        if embedding is None:
            embedding = embedder.embed(source, spec.span)
            if cache is not None:
                cache.put(key, embedding)
        anchors.append(
            SpeakerAnchor(
                role=spec.role,
                span=spec.span,
                source_recording=spec.recording,
                embedding=embedding,
                label=spec.label,
            )
        )
    return anchors


def anchor_similarity_matrix(
    profiles: list[AnchorProfile],
) -> tuple[list[str], np.ndarray]:
    """Anchor-vs-anchor cosine grid across the given profiles.

    Returns display labels ("Trainer1", "Trainee3", ...) and the square
    similarity matrix with a unit diagonal.
    """
    anchors = [a for profile in profiles for a in profile.anchors]
    labels = []
    counters: dict[str, int] = {}
    for anchor in anchors:
        counters[anchor.role] = counters.get(anchor.role, 0) + 1
        labels.append(f"{anchor.role.capitalize()}{counters[anchor.role]}")
    n = len(anchors)
    matrix = np.ones((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            sim = cosine_similarity(anchors[i].embedding, anchors[j].embedding)
            matrix[i, j] = matrix[j, i] = sim
    return labels, matrix


def refined_to_record(item: RoleAttributedUtterance, surgery_id: str) -> dict:
    from .reconstruction import utterance_to_record

    record = utterance_to_record(item.utterance, surgery_id)
    record.update(
        {
            "role": item.decision.outcome,
            "sim_trainer": item.decision.sim_trainer,
            "sim_trainee": item.decision.sim_trainee,
        }
    )
    return record


def refined_from_record(record: dict) -> RoleAttributedUtterance:
    from .reconstruction import utterance_from_record

    utterance = utterance_from_record(record)
    decision = RoleDecision(
        sim_trainer=float(record["sim_trainer"]),
        sim_trainee=float(record["sim_trainee"]),
        outcome=record["role"],
    )
    return RoleAttributedUtterance(utterance=utterance, decision=decision)
