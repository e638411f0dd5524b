"""Temporal matching of predictions to timestamped annotations, binary
metrics, per-surgery aggregation, and McNemar paired comparisons.

A positive prediction matches an annotation when the annotation timestamp is
within the tolerance of the turn start, or falls inside the (tolerance-padded)
turn while the transcripts align. Matching is 1:1: assignments are made in
time order and reassigned via augmenting paths when that frees an earlier
annotation, so the matched count is maximal and never decreases as the
tolerance widens.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from scipy.stats import chi2

from .dialogue import DialogueTurn

DEFAULT_TOLERANCE_S = 5.0
_EPS = 1e-6

EXACT_TEST_MAX_DISCORDANT = 24  # larger counts use the chi-square approximation

Aligner = Callable[[str, str], bool]


@dataclass(frozen=True)
class FeedbackAnnotation:
    """A human-marked feedback instance: a timestamp, a transcript, labels."""

    surgery_id: str
    time_s: float
    transcript: str
    anatomic: bool = False
    procedural: bool = False
    technical: bool = False
    behavioral_adjustment: bool = False
    verbal_acknowledgment: bool = False

    def __post_init__(self) -> None:
        if self.time_s < 0:
            raise ValueError("annotation time must be non-negative")
        if not self.transcript:
            raise ValueError("annotation transcript must be non-empty")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class BinaryMetrics:
    """Precision/recall/F1 with None marking an undefined (0/0) value."""

    precision: float | None
    recall: float | None
    f1: float | None


@dataclass(frozen=True)
class McNemarResult:
    b: int  # A correct, B wrong
    c: int  # A wrong, B correct
    statistic: float
    p_value: float
    method: str  # chi2_cc | exact_binomial


@dataclass(frozen=True)
class MatchResult:
    counts: ConfusionCounts
    pairs: tuple[tuple[int, int], ...]  # (turn position, annotation position)

    @property
    def matched_annotations(self) -> frozenset[int]:
        return frozenset(a for _, a in self.pairs)


_WORD_RE = re.compile(r"[a-z0-9']+")


def token_overlap_aligner(pred_text: str, annot_text: str) -> bool:
    """Offline transcript-overlap check: one shared content token of length >= 4."""

    def tokens(text: str) -> set[str]:
        return {
            token.strip("'")
            for token in _WORD_RE.findall(text.lower())
            if len(token.strip("'")) >= 4
        }

    return bool(tokens(pred_text) & tokens(annot_text))


def _eligible(
    turn: DialogueTurn,
    annotation: FeedbackAnnotation,
    tolerance_s: float,
    aligner: Aligner,
    cache: dict[tuple[int, int], bool],
    key: tuple[int, int],
) -> bool:
    if abs(annotation.time_s - turn.span.start_s) <= tolerance_s + _EPS:
        return True
    if turn.span.start_s - tolerance_s - _EPS <= annotation.time_s <= turn.span.end_s + _EPS:
        if key not in cache:
            cache[key] = bool(aligner(turn.text, annotation.transcript))
        return cache[key]
    return False


def match_predictions(
    scored: Sequence[tuple[DialogueTurn, bool]],
    annotations: Sequence[FeedbackAnnotation],
    tolerance_s: float = DEFAULT_TOLERANCE_S,
    aligner: Aligner | None = None,
) -> MatchResult:
    """Match positive predictions 1:1 against annotations of one surgery.

    tp + fn always equals the annotation count and tp + fp the positive
    prediction count. True negatives are the negative-predicted turns with no
    annotation nearby in time (the aligner is not consulted for them).
    """
    if tolerance_s < 0:
        raise ValueError("tolerance must be non-negative")
    surgeries = {a.surgery_id for a in annotations}
    if len(surgeries) > 1:
        raise ValueError(f"cross-surgery mixing: annotations from {sorted(surgeries)}")
    aligner = aligner or token_overlap_aligner

    positives = sorted(
        (i for i, (_, is_pos) in enumerate(scored) if is_pos),
        key=lambda i: scored[i][0].span.start_s,
    )
    annot_order = sorted(range(len(annotations)), key=lambda j: annotations[j].time_s)
    align_cache: dict[tuple[int, int], bool] = {}

    def eligible(i: int, j: int) -> bool:
        return _eligible(
            scored[i][0], annotations[j], tolerance_s, aligner, align_cache, (i, j)
        )

    # Time-ordered assignment with augmenting paths: each positive turn takes
    # the earliest annotation it can, displacing earlier assignments when the
    # displaced turn can move on to another annotation.
    owner: dict[int, int] = {}  # annotation position -> turn position

    def try_assign(i: int, visited: set[int]) -> bool:
        for j in annot_order:
            if j in visited or not eligible(i, j):
                continue
            visited.add(j)
            if j not in owner or try_assign(owner[j], visited):
                owner[j] = i
                return True
        return False

    for i in positives:
        try_assign(i, set())

    pairs = tuple(sorted((turn_pos, annot_pos) for annot_pos, turn_pos in owner.items()))
    tp = len(pairs)
    fp = len(positives) - tp
    fn = len(annotations) - tp

    tn = 0
    for i, (turn, is_pos) in enumerate(scored):
        if is_pos:
            continue
        nearby = any(
            abs(a.time_s - turn.span.start_s) <= tolerance_s + _EPS
            or turn.span.start_s - tolerance_s - _EPS <= a.time_s <= turn.span.end_s + _EPS
            for a in annotations
        )
        if not nearby:
            tn += 1

    return MatchResult(counts=ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn), pairs=pairs)


def binary_metrics(counts: ConfusionCounts) -> BinaryMetrics:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp > 0 else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn > 0 else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return BinaryMetrics(precision=precision, recall=recall, f1=f1)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Unweighted mean and sample (n-1) standard deviation; one value -> std 0."""
    if not values:
        raise ValueError("no values to aggregate")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_per_surgery(
    per_surgery: Sequence[BinaryMetrics],
) -> dict[str, tuple[float, float] | None]:
    """Mean +/- sample std of each metric across surgeries, skipping undefined
    values; None when a metric is undefined everywhere."""
    if not per_surgery:
        raise ValueError("no surgeries to aggregate")
    out: dict[str, tuple[float, float] | None] = {}
    for name in ("precision", "recall", "f1"):
        defined = [getattr(m, name) for m in per_surgery if getattr(m, name) is not None]
        out[name] = mean_std(defined) if defined else None
    return out


def _exact_binomial_p(b: int, c: int) -> float:
    """Two-sided sign-test p-value for discordant counts under p = 1/2."""
    n = b + c
    if n == 0 or b == c:
        return 1.0
    k = min(b, c)
    total = 2**n
    tail = sum(math.comb(n, i) for i in range(k + 1))
    return float(Fraction(2 * tail, total))


def mcnemar(paired: Sequence[tuple[bool, bool]]) -> McNemarResult:
    """Paired comparison of two variants' per-case correctness.

    Uses the continuity-corrected chi-square for b + c >= 25 and the exact
    two-sided binomial otherwise. The statistic reported is always the
    corrected chi-square value (informational on the exact path).
    """
    if not paired:
        raise ValueError("mcnemar requires at least one pair")
    b = sum(1 for correct_a, correct_b in paired if correct_a and not correct_b)
    c = sum(1 for correct_a, correct_b in paired if not correct_a and correct_b)
    n = b + c
    statistic = (abs(b - c) - 1) ** 2 / n if n > 0 else 0.0
    if n > EXACT_TEST_MAX_DISCORDANT:
        return McNemarResult(
            b=b, c=c, statistic=statistic, p_value=float(chi2.sf(statistic, 1)), method="chi2_cc"
        )
    return McNemarResult(
        b=b, c=c, statistic=statistic, p_value=_exact_binomial_p(b, c), method="exact_binomial"
    )


@dataclass(frozen=True)
class VariantComparison:
    mcnemar: McNemarResult
    metrics_a: BinaryMetrics
    metrics_b: BinaryMetrics
    significant_05: bool
    significant_10: bool


def compare_variants(
    scored_a: Sequence[tuple[DialogueTurn, bool]],
    scored_b: Sequence[tuple[DialogueTurn, bool]],
    annotations: Sequence[FeedbackAnnotation],
    tolerance_s: float = DEFAULT_TOLERANCE_S,
    aligner: Aligner | None = None,
) -> VariantComparison:
    """Evaluate two pipeline variants against one shared annotation set.

    Per-annotation correctness (matched or missed) feeds McNemar's test.
    """
    match_a = match_predictions(scored_a, annotations, tolerance_s, aligner)
    match_b = match_predictions(scored_b, annotations, tolerance_s, aligner)
    hit_a = match_a.matched_annotations
    hit_b = match_b.matched_annotations
    paired = [(j in hit_a, j in hit_b) for j in range(len(annotations))]
    result = mcnemar(paired) if paired else McNemarResult(0, 0, 0.0, 1.0, "exact_binomial")
    return VariantComparison(
        mcnemar=result,
        metrics_a=binary_metrics(match_a.counts),
        metrics_b=binary_metrics(match_b.counts),
        significant_05=result.p_value < 0.05,
        significant_10=result.p_value < 0.1,
    )


# ---------------------------------------------------------------------------
# Annotation ingestion (CSV / JSON-lines) and report rendering
# ---------------------------------------------------------------------------

ANNOTATION_FIELDS = (
    "surgery_id",
    "time_s",
    "transcript",
    "anatomic",
    "procedural",
    "technical",
    "behavioral_adjustment",
    "verbal_acknowledgment",
)

_TRUE_WORDS = {"1", "true", "yes", "y"}
_FALSE_WORDS = {"0", "false", "no", "n", ""}


def _parse_bool(raw: object) -> bool:
    if isinstance(raw, bool):
        return raw
    word = str(raw).strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ValueError(f"cannot interpret {raw!r} as a boolean label")


def _annotation_from_mapping(row: dict) -> FeedbackAnnotation:
    return FeedbackAnnotation(
        surgery_id=str(row["surgery_id"]),
        time_s=float(row["time_s"]),
        transcript=str(row["transcript"]),
        anatomic=_parse_bool(row.get("anatomic", False)),
        procedural=_parse_bool(row.get("procedural", False)),
        technical=_parse_bool(row.get("technical", False)),
        behavioral_adjustment=_parse_bool(row.get("behavioral_adjustment", False)),
        verbal_acknowledgment=_parse_bool(row.get("verbal_acknowledgment", False)),
    )


def load_annotations(path: str | os.PathLike) -> list[FeedbackAnnotation]:
    path = os.fspath(path)
    annotations = []
    if path.endswith(".jsonl"):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    annotations.append(_annotation_from_mapping(json.loads(line)))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                annotations.append(_annotation_from_mapping(row))
    return annotations


def save_annotations_csv(path: str | os.PathLike, annotations: Sequence[FeedbackAnnotation]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        for a in annotations:
            writer.writerow(
                [
                    a.surgery_id,
                    repr(a.time_s),
                    a.transcript,
                    int(a.anatomic),
                    int(a.procedural),
                    int(a.technical),
                    int(a.behavioral_adjustment),
                    int(a.verbal_acknowledgment),
                ]
            )


def format_mean_std(pair: tuple[float, float] | None) -> str:
    if pair is None:
        return "  --  "
    mean, std = pair
    return f"{mean:.2f}±{std:.2f}"


def significance_mark(p_value: float) -> str:
    if p_value < 0.05:
        return "*"
    if p_value < 0.1:
        return "†"
    return ""


def render_detection_table(
    variant_rows: list[tuple[str, dict[str, tuple[float, float] | None], str]]
) -> str:
    """Plain-text feedback-detection table: variant, F1, precision, recall.

    Each row is (variant label, aggregate dict, significance mark vs the
    prior row).
    """
    lines = ["Feedback Detection", f"{'Variant':<32}{'F1-bin':<14}{'Precision':<14}{'Recall':<14}"]
    for label, aggregate, mark in variant_rows:
        f1 = format_mean_std(aggregate.get("f1")) + mark
        lines.append(
            f"{label:<32}{f1:<14}"
            f"{format_mean_std(aggregate.get('precision')):<14}"
            f"{format_mean_std(aggregate.get('recall')):<14}"
        )
    lines.append("Significant gain vs prior step: *p<0.05, †p<0.1")
    return "\n".join(lines)


def render_downstream_table(
    dimension_order: Sequence[str],
    variant_rows: list[tuple[str, dict[str, tuple[float, float] | None]]],
) -> str:
    """Plain-text effectiveness/components table (F1 per dimension)."""
    widths = [max(len(dim) + 2, 14) for dim in dimension_order]
    header = f"{'Variant':<32}" + "".join(
        f"{dim:<{w}}" for dim, w in zip(dimension_order, widths)
    )
    lines = ["Feedback Effectiveness and Components (F1 binary)", header]
    for label, by_dimension in variant_rows:
        cells = "".join(
            f"{format_mean_std(by_dimension.get(dim)):<{w}}"
            for dim, w in zip(dimension_order, widths)
        )
        lines.append(f"{label:<32}{cells}")
    return "\n".join(lines)
