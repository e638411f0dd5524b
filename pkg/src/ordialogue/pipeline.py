"""Stage orchestration shared by the CLI and the review service.

Each stage reads its predecessor's JSON-lines artifacts from the surgery's
output directory, writes its own, and records counts in the run manifest.
Artifact bytes are canonical, so deterministic backends reproduce identical
trees.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .audio_io import load_wav
from .backends import (
    AsrBackend,
    DiarizationBackend,
    EmbeddingBackend,
    RemoteAsr,
    RemoteClassifier,
    RemoteDiarizer,
    RemoteEmbedder,
    RemoteEndpoint,
    RemoteVad,
    BackendDescriptor,
    TextClassifierBackend,
    VadBackend,
)
from .dialogue import assemble_dialogue, context_window, turn_from_record, turn_to_record
from .evaluation import (
    Aligner,
    BinaryMetrics,
    FeedbackAnnotation,
    aggregate_per_surgery,
    binary_metrics,
    load_annotations,
    match_predictions,
    mcnemar,
    render_detection_table,
    render_downstream_table,
    significance_mark,
    token_overlap_aligner,
)
from .project import ProjectConfig, ProjectError, SurgeryInput, update_manifest
from .prompts import PromptTask, build_prompt
from .reconstruction import (
    ReconstructionConfig,
    reconstruct_recording,
    utterance_from_record,
    utterance_to_record,
)
from .records import read_jsonl, write_jsonl
from .refinement import (
    AnchorProfile,
    EmbeddingCache,
    RefinementResult,
    RoleAttributedUtterance,
    RoleDecision,
    build_anchor_profile,
    detect_trivial_hallucination,
    embed_anchor_specs,
    load_anchor_specs,
    refine_utterances,
    refined_from_record,
    refined_to_record,
    sweep_similarity_threshold,
)
from .simulate import load_scenario, simulate_surgery
from .tasks import classify_components, classify_feedback, parse_yes_no_map, predict_effectiveness, prediction_to_record
from .timeline import resample_to_mono_16k

VARIANT_REFINED = "refined"
VARIANT_DIALOGUE = "dialogue"

VAD_SWEEP_GRID = (0.0, 0.1, 0.3, 0.5)


@dataclass
class SurgeryRuntime:
    """Everything needed to run stages for one surgery."""

    surgery: SurgeryInput
    audio: object
    vad: VadBackend
    dia: DiarizationBackend
    asr: AsrBackend
    embedder: EmbeddingBackend
    classifier: TextClassifierBackend | None
    annotations: list[FeedbackAnnotation]
    simulated: bool


def _remote_endpoint(cfg, kind: str) -> RemoteEndpoint:
    endpoint = RemoteEndpoint(url=cfg.url, timeout_s=cfg.timeout_s)
    if cfg.auth_env:
        endpoint.auth_token = os.environ.get(cfg.auth_env)
    return endpoint


def build_runtime(project: ProjectConfig, surgery: SurgeryInput) -> SurgeryRuntime:
    annotations: list[FeedbackAnnotation] = []
    if surgery.scenario_path is not None:
        scenario = load_scenario(surgery.scenario_path)
        sim = simulate_surgery(scenario)
        annotations = list(sim.annotations)
        if surgery.annotations_path is not None:
            annotations = load_annotations(surgery.annotations_path)
        return SurgeryRuntime(
            surgery=surgery,
            audio=sim.audio,
            vad=sim.vad,
            dia=sim.dia,
            asr=sim.asr,
            embedder=sim.embedder,
            classifier=sim.classifier,
            annotations=annotations,
            simulated=True,
        )
    if project.backends.mode != "remote":
        raise ProjectError(
            f"surgery {surgery.id!r} has a WAV input but backends.mode is not 'remote'"
        )
    endpoints = project.backends.endpoints
    missing = [k for k in ("vad", "dia", "asr", "embed") if k not in endpoints]
    if missing:
        raise ProjectError(f"remote mode needs endpoints for: {', '.join(missing)}")
    audio = resample_to_mono_16k(load_wav(surgery.audio_path))
    if surgery.annotations_path is not None:
        annotations = load_annotations(surgery.annotations_path)

    def descriptor(kind: str) -> BackendDescriptor:
        e = endpoints[kind]
        return BackendDescriptor(
            kind=kind, id=e.model or e.url, max_in_flight=e.max_in_flight,
            config={"model": e.model} if e.model else {},
        )

    classifier = None
    if "classify" in endpoints:
        classifier = RemoteClassifier(
            descriptor("classify"), _remote_endpoint(endpoints["classify"], "classify")
        )
    return SurgeryRuntime(
        surgery=surgery,
        audio=audio,
        vad=RemoteVad(descriptor("vad"), _remote_endpoint(endpoints["vad"], "vad")),
        dia=RemoteDiarizer(descriptor("dia"), _remote_endpoint(endpoints["dia"], "dia")),
        asr=RemoteAsr(descriptor("asr"), _remote_endpoint(endpoints["asr"], "asr")),
        embedder=RemoteEmbedder(
            descriptor("embed"),
            _remote_endpoint(endpoints["embed"], "embed"),
            dim=project.backends.embedding_dim,
        ),
        classifier=classifier,
        annotations=annotations,
        simulated=False,
    )


def classifier_aligner(classifier: TextClassifierBackend) -> Aligner:
    def align(pred_text: str, annot_text: str) -> bool:
        payload = build_prompt(PromptTask.ALIGN, pred_text, annotation=annot_text)
        raw = classifier.complete(payload)
        return parse_yes_no_map(raw, ("alignment",))["alignment"]

    return align


def pick_aligner(runtime: SurgeryRuntime) -> Aligner:
    if runtime.classifier is not None:
        return classifier_aligner(runtime.classifier)
    return token_overlap_aligner


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_reconstruct(
    project: ProjectConfig, runtime: SurgeryRuntime, *, stamp: bool = False
) -> dict[str, int]:
    cfg = ReconstructionConfig(
        chunk_len_s=project.pipeline.chunk_len_s,
        vad_gate_threshold=project.thresholds.vad_gate,
        asr_run_count=project.pipeline.asr_run_count,
    )
    surgery_id = runtime.surgery.id
    utterances = reconstruct_recording(
        runtime.audio, runtime.vad, runtime.dia, runtime.asr, cfg, surgery_id
    )
    out_dir = project.surgery_dir(surgery_id)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "utterances.jsonl", (utterance_to_record(u, surgery_id) for u in utterances))

    # persist VAD activity per chunk for the review timeline
    from .timeline import AudioChunk, chunk_plan

    chunks_payload = []
    for index, start, end in chunk_plan(runtime.audio.duration_s, cfg.chunk_len_s):
        chunk = AudioChunk(surgery_id, index, start, runtime.audio.slice(start, end))
        series = runtime.vad.activity(chunk)
        chunks_payload.append(
            {
                "origin_s": series.origin_s,
                "frame_len_s": series.frame_len_s,
                "values": [round(float(v), 4) for v in series.values],
            }
        )
    activity_doc = {"v": 1, "surgery_id": surgery_id, "chunks": chunks_payload}
    (out_dir / "activity.json").write_text(
        json.dumps(activity_doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    counts = {"utterances": len(utterances), "chunks": len(chunks_payload)}
    update_manifest(out_dir, "reconstruct", project, counts, stamp=stamp)
    return counts


def load_anchor_profiles(
    project: ProjectConfig,
    runtime: SurgeryRuntime,
    *,
    cache: EmbeddingCache | None = None,
) -> tuple[AnchorProfile, AnchorProfile]:
    if not project.anchors_path.exists():
        raise ProjectError(
            f"no anchor set at {project.anchors_path}; record anchors with "
            "`ordialogue simulate` (fixture projects) or POST /anchors in the review "
            "service, then rerun refine"
        )
    specs = [
        s
        for s in load_anchor_specs(project.anchors_path)
        if s.recording == runtime.surgery.id
    ]
    if not specs:
        raise ProjectError(
            f"anchor set {project.anchors_path} has no anchors for recording "
            f"{runtime.surgery.id!r}"
        )
    anchors = embed_anchor_specs(specs, runtime.audio, runtime.embedder, cache)
    trainer = [a for a in anchors if a.role == "trainer"]
    trainee = [a for a in anchors if a.role == "trainee"]
    minimum = project.thresholds.min_anchors
    return (
        build_anchor_profile("trainer", trainer, min_anchors=minimum),
        build_anchor_profile("trainee", trainee, min_anchors=minimum),
    )


def stage_refine(
    project: ProjectConfig,
    runtime: SurgeryRuntime,
    *,
    threshold: float | None = None,
    stamp: bool = False,
) -> dict[str, int]:
    surgery_id = runtime.surgery.id
    out_dir = project.surgery_dir(surgery_id)
    utterances_path = out_dir / "utterances.jsonl"
    if not utterances_path.exists():
        raise ProjectError(
            f"no reconstruction artifacts for {surgery_id!r}; run `ordialogue reconstruct` first"
        )
    utterances = [utterance_from_record(r) for r in read_jsonl(utterances_path)]
    cache = EmbeddingCache(out_dir / "embeddings.bin")
    trainer, trainee = load_anchor_profiles(project, runtime, cache=cache)
    cache.save()
    threshold = project.thresholds.sim_threshold if threshold is None else threshold
    result = refine_utterances(
        utterances, runtime.audio, trainer, trainee, runtime.embedder, threshold
    )
    write_jsonl(out_dir / "refined.jsonl", (refined_to_record(r, surgery_id) for r in result.kept))
    write_jsonl(out_dir / "removed.jsonl", (refined_to_record(r, surgery_id) for r in result.removed))
    dialogue = assemble_dialogue(list(result.kept))
    write_jsonl(out_dir / "dialogue.jsonl", (turn_to_record(t) for t in dialogue))
    counts = {
        "utterances_in": len(utterances),
        "kept": len(result.kept),
        "hallucinations_removed": len(result.removed),
        "turns": len(dialogue),
    }
    update_manifest(out_dir, "refine", project, counts, stamp=stamp)
    return counts


def _raw_dialogue(records: list[dict]) -> list:
    attributed = [
        RoleAttributedUtterance(utterance_from_record(r), RoleDecision(0.0, 0.0, "unknown"))
        for r in records
    ]
    return assemble_dialogue(attributed)


def load_dialogue(project: ProjectConfig, surgery_id: str, variant: str) -> list:
    out_dir = project.surgery_dir(surgery_id)
    if variant == VARIANT_REFINED:
        path = out_dir / "dialogue.jsonl"
        if not path.exists():
            raise ProjectError(
                f"no refined dialogue for {surgery_id!r}; run `ordialogue refine` first"
            )
        return [turn_from_record(r) for r in read_jsonl(path)]
    path = out_dir / "utterances.jsonl"
    if not path.exists():
        raise ProjectError(
            f"no reconstruction artifacts for {surgery_id!r}; run `ordialogue reconstruct` first"
        )
    return _raw_dialogue(read_jsonl(path))


def stage_detect(
    project: ProjectConfig,
    runtime: SurgeryRuntime,
    *,
    variant: str = VARIANT_REFINED,
    stamp: bool = False,
) -> dict[str, int]:
    if runtime.classifier is None:
        raise ProjectError("no text classifier configured; detection needs one")
    surgery_id = runtime.surgery.id
    dialogue = load_dialogue(project, surgery_id, variant)
    records = []
    positives = 0
    for turn in dialogue:
        prediction = classify_feedback(
            dialogue, turn.index, runtime.classifier, k=project.thresholds.context_k
        )
        positives += int(prediction.is_feedback)
        records.append(
            prediction_to_record(
                surgery_id,
                turn.index,
                PromptTask.DETECT,
                {"feedback": prediction.is_feedback},
                prediction.raw_response,
            )
        )
    out_dir = project.surgery_dir(surgery_id)
    write_jsonl(out_dir / f"task1_{variant}.jsonl", records)
    counts = {f"turns_classified_{variant}": len(records), f"positives_{variant}": positives}
    update_manifest(out_dir, f"detect_{variant}", project, counts, stamp=stamp)
    return counts


def stage_assess(
    project: ProjectConfig, runtime: SurgeryRuntime, *, stamp: bool = False
) -> dict[str, int]:
    """Tasks 2 and 3 on the turns Task 1 called feedback (refined variant)."""
    if runtime.classifier is None:
        raise ProjectError("no text classifier configured; assessment needs one")
    surgery_id = runtime.surgery.id
    out_dir = project.surgery_dir(surgery_id)
    task1_path = out_dir / f"task1_{VARIANT_REFINED}.jsonl"
    if not task1_path.exists():
        raise ProjectError(
            f"no detection predictions for {surgery_id!r}; run `ordialogue detect` first"
        )
    dialogue = load_dialogue(project, surgery_id, VARIANT_REFINED)
    positive_indices = [
        r["turn_index"] for r in read_jsonl(task1_path) if r["values"]["feedback"]
    ]
    k = project.thresholds.context_k
    effectiveness_records = []
    component_records = []
    for index in positive_indices:
        window = context_window(dialogue, index, k)
        effectiveness = predict_effectiveness(window, runtime.classifier)
        effectiveness_records.append(
            prediction_to_record(
                surgery_id,
                index,
                PromptTask.EFFECTIVENESS_DIALOGUE,
                {
                    "verbal acknowledgement": effectiveness.verbal_ack,
                    "behavioral change": effectiveness.behavioral_change,
                },
                "",
            )
        )
        components = classify_components(window, runtime.classifier)
        component_records.append(
            prediction_to_record(
                surgery_id,
                index,
                PromptTask.COMPONENTS_DIALOGUE,
                {
                    "anatomic": components.anatomic,
                    "procedural": components.procedural,
                    "technical": components.technical,
                },
                "",
            )
        )
    write_jsonl(out_dir / "task2.jsonl", effectiveness_records)
    write_jsonl(out_dir / "task3.jsonl", component_records)
    counts = {"assessed": len(positive_indices)}
    update_manifest(out_dir, "assess", project, counts, stamp=stamp)
    return counts


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_DIMENSIONS = {
    "task2": ("behavioral_adjustment", "verbal_acknowledgment"),
    "task3": ("anatomic", "procedural", "technical"),
}
_PREDICTION_KEYS = {
    "behavioral_adjustment": "behavioral change",
    "verbal_acknowledgment": "verbal acknowledgement",
    "anatomic": "anatomic",
    "procedural": "procedural",
    "technical": "technical",
}


def _metrics_payload(metrics: BinaryMetrics) -> dict:
    return {"precision": metrics.precision, "recall": metrics.recall, "f1": metrics.f1}


def _scored_turns(dialogue: list, records: list[dict]) -> list:
    by_index = {r["turn_index"]: r["values"]["feedback"] for r in records}
    return [(turn, bool(by_index.get(turn.index, False))) for turn in dialogue]


def stage_evaluate(
    project: ProjectConfig,
    runtimes: list[SurgeryRuntime],
    *,
    stamp: bool = False,
) -> dict:
    """Score every detection variant against annotations, compare variants
    with McNemar, evaluate Tasks 2-3 on aligned pairs, and render the report."""
    tolerance = project.thresholds.tolerance_s
    variants_present: dict[str, dict[str, BinaryMetrics]] = {}
    per_surgery_payload: dict[str, dict] = {}
    correctness: dict[str, dict[str, list[bool]]] = {}
    downstream: dict[str, dict[str, dict[str, list[BinaryMetrics]]]] = {
        "task2": {}, "task3": {}
    }

    for runtime in runtimes:
        surgery_id = runtime.surgery.id
        out_dir = project.surgery_dir(surgery_id)
        annotations = runtime.annotations
        aligner = pick_aligner(runtime)
        per_surgery_payload[surgery_id] = {"variants": {}}
        match_pairs_refined: dict[int, int] = {}
        dialogue_refined = None
        for variant in (VARIANT_DIALOGUE, VARIANT_REFINED):
            predictions_path = out_dir / f"task1_{variant}.jsonl"
            if not predictions_path.exists():
                continue
            dialogue = load_dialogue(project, surgery_id, variant)
            scored = _scored_turns(dialogue, read_jsonl(predictions_path))
            result = match_predictions(scored, annotations, tolerance, aligner)
            metrics = binary_metrics(result.counts)
            variants_present.setdefault(variant, {})[surgery_id] = metrics
            hit = result.matched_annotations
            correctness.setdefault(variant, {})[surgery_id] = [
                j in hit for j in range(len(annotations))
            ]
            per_surgery_payload[surgery_id]["variants"][variant] = {
                "counts": {
                    "tp": result.counts.tp,
                    "fp": result.counts.fp,
                    "fn": result.counts.fn,
                    "tn": result.counts.tn,
                },
                "metrics": _metrics_payload(metrics),
            }
            if variant == VARIANT_REFINED:
                match_pairs_refined = {t: a for t, a in result.pairs}
                dialogue_refined = dialogue

        # Tasks 2-3: predicted labels vs labels of the aligned annotations
        if dialogue_refined is not None:
            for task, dims in _DIMENSIONS.items():
                path = out_dir / f"{task}.jsonl"
                if not path.exists():
                    continue
                values_by_index = {r["turn_index"]: r["values"] for r in read_jsonl(path)}
                turn_pos_by_index = {t.index: pos for pos, t in enumerate(dialogue_refined)}
                for dim in dims:
                    pred_truth: list[tuple[bool, bool]] = []
                    for turn_index, values in values_by_index.items():
                        pos = turn_pos_by_index.get(turn_index)
                        if pos is None or pos not in match_pairs_refined:
                            continue
                        annotation = annotations[match_pairs_refined[pos]]
                        pred_truth.append(
                            (bool(values[_PREDICTION_KEYS[dim]]), bool(getattr(annotation, dim)))
                        )
                    if not pred_truth:
                        continue
                    tp = sum(1 for p, t in pred_truth if p and t)
                    fp = sum(1 for p, t in pred_truth if p and not t)
                    fn = sum(1 for p, t in pred_truth if not p and t)
                    tn = sum(1 for p, t in pred_truth if not p and not t)
                    from .evaluation import ConfusionCounts

                    metrics = binary_metrics(ConfusionCounts(tp, fp, fn, tn))
                    downstream[task].setdefault(dim, {}).setdefault(surgery_id, []).append(
                        metrics
                    )

    report: dict = {"v": 1, "task1": {"variants": {}, "comparisons": []}}
    for variant, by_surgery in variants_present.items():
        aggregate = aggregate_per_surgery(list(by_surgery.values()))
        report["task1"]["variants"][variant] = {
            "per_surgery": {
                sid: _metrics_payload(metrics) for sid, metrics in sorted(by_surgery.items())
            },
            "aggregate": {
                name: list(pair) if pair else None for name, pair in aggregate.items()
            },
        }

    if VARIANT_DIALOGUE in correctness and VARIANT_REFINED in correctness:
        paired = []
        for surgery_id in correctness[VARIANT_DIALOGUE]:
            if surgery_id not in correctness[VARIANT_REFINED]:
                continue
            paired.extend(
                zip(correctness[VARIANT_DIALOGUE][surgery_id], correctness[VARIANT_REFINED][surgery_id])
            )
        if paired:
            result = mcnemar(paired)
            report["task1"]["comparisons"].append(
                {
                    "a": VARIANT_DIALOGUE,
                    "b": VARIANT_REFINED,
                    "b_count": result.b,
                    "c_count": result.c,
                    "statistic": result.statistic,
                    "p_value": result.p_value,
                    "method": result.method,
                    "significant_05": result.p_value < 0.05,
                    "significant_10": result.p_value < 0.1,
                }
            )

    for task, dims in _DIMENSIONS.items():
        payload = {}
        for dim in dims:
            by_surgery = downstream[task].get(dim, {})
            flattened = [m for metric_list in by_surgery.values() for m in metric_list]
            if flattened:
                aggregate = aggregate_per_surgery(flattened)
                payload[dim] = {
                    name: list(pair) if pair else None for name, pair in aggregate.items()
                }
        report[task] = payload
    report["per_surgery"] = per_surgery_payload

    project.output_dir.mkdir(parents=True, exist_ok=True)
    (project.output_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (project.output_dir / "report.txt").write_text(
        render_report_text(report) + "\n", encoding="utf-8"
    )
    for runtime in runtimes:
        update_manifest(
            project.surgery_dir(runtime.surgery.id),
            "evaluate",
            project,
            {"annotations": len(runtime.annotations)},
            stamp=stamp,
        )
    return report


def render_report_text(report: dict) -> str:
    sections = []
    variant_rows = []
    comparisons = {c["b"]: c for c in report["task1"].get("comparisons", [])}
    for variant in (VARIANT_DIALOGUE, VARIANT_REFINED):
        entry = report["task1"]["variants"].get(variant)
        if entry is None:
            continue
        aggregate = {
            name: tuple(pair) if pair else None for name, pair in entry["aggregate"].items()
        }
        mark = ""
        if variant in comparisons:
            mark = significance_mark(comparisons[variant]["p_value"])
        variant_rows.append((variant, aggregate, mark))
    if variant_rows:
        sections.append(render_detection_table(variant_rows))

    dims = []
    by_dim: dict[str, tuple[float, float] | None] = {}
    for task in ("task2", "task3"):
        for dim, aggregate in report.get(task, {}).items():
            dims.append(dim)
            pair = aggregate.get("f1")
            by_dim[dim] = tuple(pair) if pair else None
    if dims:
        sections.append(render_downstream_table(dims, [("refined", by_dim)]))
    return "\n\n".join(sections) if sections else "no evaluation artifacts found"


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def sweep_vad(
    project: ProjectConfig, runtime: SurgeryRuntime, grid: tuple[float, ...] = VAD_SWEEP_GRID
) -> list[dict]:
    """Detection quality as the VAD gate varies: gate -> reconstruct ->
    refine -> detect -> match, one row per threshold."""
    from dataclasses import replace as dc_replace

    rows = []
    aligner = pick_aligner(runtime)
    for gate in grid:
        gated_project = dc_replace(
            project, thresholds=dc_replace(project.thresholds, vad_gate=gate)
        )
        cfg = ReconstructionConfig(
            chunk_len_s=project.pipeline.chunk_len_s,
            vad_gate_threshold=gate,
            asr_run_count=project.pipeline.asr_run_count,
        )
        utterances = reconstruct_recording(
            runtime.audio, runtime.vad, runtime.dia, runtime.asr, cfg, runtime.surgery.id
        )
        cache = EmbeddingCache(project.surgery_dir(runtime.surgery.id) / "embeddings.bin")
        trainer, trainee = load_anchor_profiles(gated_project, runtime, cache=cache)
        refined = refine_utterances(
            utterances, runtime.audio, trainer, trainee, runtime.embedder,
            project.thresholds.sim_threshold,
        )
        dialogue = assemble_dialogue(list(refined.kept))
        scored = []
        for turn in dialogue:
            prediction = classify_feedback(
                dialogue, turn.index, runtime.classifier, k=project.thresholds.context_k
            )
            scored.append((turn, prediction.is_feedback))
        result = match_predictions(scored, runtime.annotations, project.thresholds.tolerance_s, aligner)
        metrics = binary_metrics(result.counts)
        rows.append(
            {
                "threshold": gate,
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f1": metrics.f1,
            }
        )
    return rows


def sweep_similarity(project: ProjectConfig, runtime: SurgeryRuntime) -> list[dict]:
    """Appendix-style similarity sweep: double-run labels vs threshold flags."""
    out_dir = project.surgery_dir(runtime.surgery.id)
    utterances_path = out_dir / "utterances.jsonl"
    if not utterances_path.exists():
        raise ProjectError(
            f"no reconstruction artifacts for {runtime.surgery.id!r}; run reconstruct first"
        )
    utterances = [utterance_from_record(r) for r in read_jsonl(utterances_path)]
    if any(len(u.asr_runs) < 2 for u in utterances):
        raise ProjectError(
            "similarity sweep needs >= 2 ASR runs per utterance; set pipeline.asr_run_count to 2"
        )
    cache = EmbeddingCache(out_dir / "embeddings.bin")
    trainer, trainee = load_anchor_profiles(project, runtime, cache=cache)
    cache.save()
    from .refinement import role_similarity

    labeled = []
    for utterance in utterances:
        embedding = runtime.embedder.embed(runtime.audio, utterance.span)
        sims = (
            role_similarity(embedding, trainer),
            role_similarity(embedding, trainee),
        )
        labeled.append((sims, detect_trivial_hallucination(utterance)))
    rows = sweep_similarity_threshold(labeled)
    return [
        {
            "threshold": row.threshold,
            "precision": row.precision,
            "recall": row.recall,
            "plm": row.plm,
            "note": row.note,
        }
        for row in rows
    ]


def render_sweep_table(rows: list[dict], score_name: str) -> str:
    header = f"{'Thresh':<8}{'Precision':<12}{'Recall':<12}{score_name:<12}"
    lines = [header]
    for row in rows:
        def cell(value):
            return f"{value:.3f}" if isinstance(value, float) else "--"

        score = row.get(score_name.lower()) if score_name.lower() in row else row.get("f1")
        lines.append(
            f"{row['threshold']:<8}{cell(row['precision']):<12}{cell(row['recall']):<12}{cell(score):<12}"
        )
    return "\n".join(lines)
