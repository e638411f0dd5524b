import math

import numpy as np
import pytest

from ordialogue.dialogue import DialogueTurn
from ordialogue.evaluation import (
    BinaryMetrics,
    ConfusionCounts,
    FeedbackAnnotation,
    aggregate_per_surgery,
    binary_metrics,
    compare_variants,
    load_annotations,
    match_predictions,
    mcnemar,
    mean_std,
    render_detection_table,
    save_annotations_csv,
    token_overlap_aligner,
)
from ordialogue.records import write_jsonl
from ordialogue.timeline import TimeSpan, seconds_to_clock


def turn(index, start, end, text="spoken words here"):
    return DialogueTurn(
        index=index,
        role="trainer",
        span=TimeSpan(start, end),
        text=text,
        timestamp_label=seconds_to_clock(start),
    )


def annot(time_s, transcript="spoken words here", surgery="s1", **labels):
    return FeedbackAnnotation(surgery_id=surgery, time_s=time_s, transcript=transcript, **labels)


class TestBinaryMetrics:
    # confusion-matrix oracle values, hand-computed from the published counts
    @pytest.mark.parametrize(
        "tp, fp, fn, tn, p, r, f1",
        [
            (613, 358, 474, 2144, 0.6313, 0.5639, 0.5957),
            (500, 197, 180, 502, 0.7174, 0.7353, 0.7262),
            (493, 115, 115, 656, 0.8109, 0.8109, 0.8109),
        ],
    )
    def test_confusion_matrix_oracle(self, tp, fp, fn, tn, p, r, f1):
        metrics = binary_metrics(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
        assert metrics.precision == pytest.approx(p, abs=1e-4)
        assert metrics.recall == pytest.approx(r, abs=1e-4)
        assert metrics.f1 == pytest.approx(f1, abs=1e-4)

    def test_all_zero_is_undefined(self):
        metrics = binary_metrics(ConfusionCounts(0, 0, 0, 10))
        assert metrics.precision is None and metrics.recall is None and metrics.f1 is None

    def test_scale_free(self):
        base = binary_metrics(ConfusionCounts(6, 3, 2, 9))
        scaled = binary_metrics(ConfusionCounts(60, 30, 20, 90))
        assert base == scaled

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(-1, 0, 0, 0)


class TestMatching:
    def test_time_aligned_positive_is_tp(self):
        scored = [(turn(0, 2384.0, 2398.0, "so even more than what you did"), True)]
        annotations = [annot(2384.0, "so even more than what you've done")]
        result = match_predictions(scored, annotations)
        assert result.counts == ConfusionCounts(tp=1, fp=0, fn=0, tn=0)

    def test_unmatched_annotation_is_fn(self):
        scored = [(turn(0, 100.0, 104.0), False)]
        annotations = [annot(500.0)]
        result = match_predictions(scored, annotations)
        assert result.counts.fn == 1 and result.counts.tp == 0

    def test_unmatched_positive_is_fp(self):
        scored = [(turn(0, 100.0, 104.0, "nothing in common zzz"), True)]
        annotations = [annot(500.0, "far away entirely")]
        result = match_predictions(scored, annotations)
        assert result.counts.fp == 1 and result.counts.fn == 1

    def test_transcript_overlap_extends_match_window(self):
        # annotation 9 s after the turn start: outside the 5 s window but
        # inside the turn span, accepted only because the transcripts align
        scored = [(turn(0, 100.0, 112.0, "buzz the bladder neck right there"), True)]
        matching = [annot(109.0, "buzz that bladder neck")]
        not_matching = [annot(109.0, "completely unrelated words")]
        assert match_predictions(scored, matching).counts.tp == 1
        assert match_predictions(scored, not_matching).counts.tp == 0

    def test_each_annotation_matches_at_most_one_prediction(self):
        scored = [(turn(0, 10.0, 13.0), True), (turn(1, 12.0, 15.0), True)]
        annotations = [annot(11.0)]
        result = match_predictions(scored, annotations)
        assert result.counts.tp == 1 and result.counts.fp == 1

    def test_augmentation_finds_maximum_matching(self):
        # first positive could claim the only annotation the second can reach;
        # reassignment must free it
        scored = [
            (turn(0, 10.0, 13.0), True),  # reaches both annotations
            (turn(1, 14.0, 17.0), True),  # reaches only the first annotation
        ]
        annotations = [annot(12.0), annot(6.0)]
        result = match_predictions(scored, annotations)
        assert result.counts.tp == 2

    def test_negative_turns_near_annotations_are_not_tn(self):
        scored = [(turn(0, 100.0, 104.0), False), (turn(1, 300.0, 304.0), False)]
        annotations = [annot(101.0)]
        result = match_predictions(scored, annotations)
        assert result.counts.tn == 1  # only the far turn counts

    def test_cross_surgery_rejected(self):
        with pytest.raises(ValueError, match="cross-surgery"):
            match_predictions(
                [(turn(0, 1.0, 2.0), True)],
                [annot(1.0, surgery="a"), annot(2.0, surgery="b")],
            )

    def test_counting_invariants_random(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n_turns = int(rng.integers(0, 20))
            scored = []
            t = 0.0
            for i in range(n_turns):
                t += float(rng.uniform(1, 30))
                scored.append(
                    (turn(i, t, t + float(rng.uniform(1, 8)), f"words {rng.integers(100)}"), bool(rng.random() < 0.5))
                )
            annotations = [
                annot(float(rng.uniform(0, max(t, 1.0))), f"words {rng.integers(100)}")
                for _ in range(int(rng.integers(0, 10)))
            ]
            result = match_predictions(scored, annotations)
            positives = sum(1 for _, p in scored if p)
            assert result.counts.tp + result.counts.fn == len(annotations)
            assert result.counts.tp + result.counts.fp == positives

    def test_tp_monotone_in_tolerance(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            scored = []
            t = 0.0
            for i in range(int(rng.integers(1, 15))):
                t += float(rng.uniform(1, 20))
                scored.append((turn(i, t, t + float(rng.uniform(1, 10))), True))
            annotations = [
                annot(float(rng.uniform(0, t + 10))) for _ in range(int(rng.integers(1, 8)))
            ]
            previous = 0
            for tolerance in (0.0, 2.0, 5.0, 10.0, 30.0):
                tp = match_predictions(scored, annotations, tolerance_s=tolerance).counts.tp
                assert tp >= previous
                previous = tp


class TestAggregation:
    def test_identical_values(self):
        assert mean_std([0.5, 0.5, 0.5]) == (0.5, 0.0)

    def test_hand_computed_pair(self):
        mean, std = mean_std([0.7, 0.9])
        assert mean == pytest.approx(0.8)
        assert std == pytest.approx(0.1414, abs=1e-4)

    def test_single_surgery(self):
        assert mean_std([0.42]) == (0.42, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_std([])

    def test_aggregate_skips_undefined(self):
        per_surgery = [
            BinaryMetrics(0.8, 0.6, 0.685),
            BinaryMetrics(None, 0.4, None),
        ]
        aggregate = aggregate_per_surgery(per_surgery)
        assert aggregate["precision"][0] == pytest.approx(0.8)
        assert aggregate["recall"][0] == pytest.approx(0.5)


def brute_force_exact_p(b, c):
    """Independent oracle: enumerate all Binomial(n, 1/2) outcomes and sum the
    probabilities no more likely than the observed count."""
    n = b + c
    if n == 0:
        return 1.0
    observed = math.comb(n, b)
    total = sum(math.comb(n, i) for i in range(n + 1) if math.comb(n, i) <= observed)
    return total / 2**n


class TestMcNemar:
    def test_no_discordance(self):
        result = mcnemar([(True, True), (False, False)])
        assert result.b == 0 and result.c == 0
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_five_fifteen(self):
        paired = [(True, False)] * 5 + [(False, True)] * 15 + [(True, True)] * 10
        result = mcnemar(paired)
        assert result.b == 5 and result.c == 15
        assert result.statistic == pytest.approx(4.05)
        assert result.method == "exact_binomial"
        assert result.p_value == pytest.approx(0.0413895, abs=1e-6)

    def test_large_balanced_counts_use_chi_square(self):
        paired = [(True, False)] * 50 + [(False, True)] * 50
        result = mcnemar(paired)
        assert result.method == "chi2_cc"
        assert result.statistic == pytest.approx(0.01)
        assert result.p_value == pytest.approx(0.92, abs=5e-3)

    def test_exact_path_agrees_with_brute_force(self):
        for b in range(0, 25):
            for c in range(0, 25 - b):
                paired = [(True, False)] * b + [(False, True)] * c + [(True, True)]
                result = mcnemar(paired)
                assert result.method == "exact_binomial"
                assert result.p_value == pytest.approx(brute_force_exact_p(b, c), abs=1e-9)

    def test_antisymmetric(self):
        paired = [(True, False)] * 4 + [(False, True)] * 9
        swapped = [(y, x) for x, y in paired]
        a, b = mcnemar(paired), mcnemar(swapped)
        assert (a.b, a.c) == (b.c, b.b)
        assert a.p_value == pytest.approx(b.p_value, abs=1e-12)

    def test_requires_pairs(self):
        with pytest.raises(ValueError):
            mcnemar([])


class TestCompareVariants:
    def _scored(self, hits, annotations):
        scored = []
        for i, annotation in enumerate(annotations):
            scored.append(
                (turn(i, annotation.time_s, annotation.time_s + 3.0), bool(hits[i]))
            )
        return scored

    def test_identical_runs_p_one(self):
        annotations = [annot(10.0 * (i + 1)) for i in range(12)]
        hits = [True] * 8 + [False] * 4
        comparison = compare_variants(
            self._scored(hits, annotations), self._scored(hits, annotations), annotations
        )
        assert comparison.mcnemar.p_value == 1.0
        assert not comparison.significant_05

    def test_fixing_twenty_breaking_four_is_significant(self):
        annotations = [annot(20.0 * (i + 1)) for i in range(30)]
        hits_a = [True] * 6 + [False] * 20 + [True] * 4
        hits_b = [True] * 6 + [True] * 20 + [False] * 4
        comparison = compare_variants(
            self._scored(hits_a, annotations), self._scored(hits_b, annotations), annotations
        )
        assert comparison.mcnemar.b == 4 and comparison.mcnemar.c == 20
        assert comparison.mcnemar.p_value == pytest.approx(brute_force_exact_p(4, 20), abs=1e-12)
        assert comparison.significant_05 and comparison.significant_10

    def test_star_thresholds(self):
        from ordialogue.evaluation import significance_mark

        assert significance_mark(0.01) == "*"
        assert significance_mark(0.07) == "†"
        assert significance_mark(0.5) == ""


class TestAligner:
    def test_shared_content_token(self):
        assert token_overlap_aligner("buzz the bladder neck", "bladder visible") is True

    def test_short_tokens_ignored(self):
        assert token_overlap_aligner("so do it now", "it is so") is False

    def test_case_folded(self):
        assert token_overlap_aligner("Tension on the SUTURE", "suture line") is True


class TestAnnotationIO:
    def _annotations(self):
        return [
            FeedbackAnnotation("s1", 12.5, "keep tension on the suture", technical=True),
            FeedbackAnnotation(
                "s1", 90.0, "stay in the plane", anatomic=True, verbal_acknowledgment=True
            ),
        ]

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "annotations.csv"
        save_annotations_csv(path, self._annotations())
        assert load_annotations(path) == self._annotations()

    def test_jsonl_ingest(self, tmp_path):
        path = tmp_path / "annotations.jsonl"
        write_jsonl(
            path,
            [
                {
                    "surgery_id": "s1",
                    "time_s": 12.5,
                    "transcript": "keep tension on the suture",
                    "technical": True,
                }
            ],
        )
        loaded = load_annotations(path)
        assert loaded == [self._annotations()[0]]

    def test_invalid_label_rejected(self, tmp_path):
        path = tmp_path / "annotations.jsonl"
        write_jsonl(
            path,
            [{"surgery_id": "s1", "time_s": 1.0, "transcript": "x", "technical": "maybe"}],
        )
        with pytest.raises(ValueError):
            load_annotations(path)


def test_detection_table_renders():
    text = render_detection_table(
        [
            ("dialogue", {"precision": (0.64, 0.15), "recall": (0.55, 0.09), "f1": (0.58, 0.11)}, ""),
            ("refined", {"precision": (0.76, 0.12), "recall": (0.85, 0.09), "f1": (0.79, 0.07)}, "*"),
        ]
    )
    assert "Feedback Detection" in text
    assert "0.79±0.07*" in text
