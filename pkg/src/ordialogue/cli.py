"""Command-line driver: simulate fixtures, run pipeline stages, sweep
thresholds, evaluate, and serve the review API.

Failures exit nonzero with a machine-readable JSON error on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .evaluation import save_annotations_csv
from .pipeline import (
    VARIANT_DIALOGUE,
    VARIANT_REFINED,
    build_runtime,
    render_report_text,
    render_sweep_table,
    stage_assess,
    stage_detect,
    stage_evaluate,
    stage_reconstruct,
    stage_refine,
    sweep_similarity,
    sweep_vad,
)
from .project import ProjectError, load_project
from .refinement import save_anchor_specs
from .simulate import (
    anchor_specs_for_scenario,
    ground_truth_annotations,
    make_scenario,
    save_scenario,
)


def _fail(error: Exception) -> None:
    payload = {"error": {"type": type(error).__name__, "message": str(error)}}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _runtimes(project, surgery_id):
    surgeries = [project.surgery(surgery_id)] if surgery_id else list(project.surgeries)
    return [build_runtime(project, s) for s in surgeries]


@click.group()
@click.option("--stamp", is_flag=True, help="record wall-clock timestamps in run manifests")
@click.pass_context
def main(ctx, stamp):
    """Dialogue reconstruction and feedback analysis workbench."""
    ctx.ensure_object(dict)
    ctx.obj["stamp"] = stamp


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--surgeries", "n_surgeries", default=1, show_default=True, type=int)
@click.option("--turns", default=60, show_default=True, type=int)
@click.option("--feedback-fraction", default=0.45, show_default=True, type=float)
@click.option("--hallucination-rate", default=0.0, show_default=True, type=float)
@click.option("--noise-spans", default=0, show_default=True, type=int)
@click.option("--hard", is_flag=True, help="add cross-role embedding leakage")
@click.option("--asr-runs", default=2, show_default=True, type=int)
def simulate(out_dir, seed, n_surgeries, turns, feedback_fraction, hallucination_rate,
             noise_spans, hard, asr_runs):
    """Generate a self-contained fixture project (scenarios, annotations, anchors)."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        surgeries = []
        anchor_specs = []
        for i in range(n_surgeries):
            surgery_id = f"sim-{i + 1:03d}"
            scenario = make_scenario(
                surgery_id=surgery_id,
                seed=seed + i,
                n_events=turns,
                feedback_fraction=feedback_fraction,
                hallucination_rate=hallucination_rate,
                n_noise_spans=noise_spans,
                cross_role_leakage=0.35 if hard else 0.0,
            )
            fixture_dir = out_dir / "fixtures" / surgery_id
            fixture_dir.mkdir(parents=True, exist_ok=True)
            save_scenario(fixture_dir / "scenario.json", scenario)
            save_annotations_csv(
                fixture_dir / "annotations.csv", ground_truth_annotations(scenario)
            )
            anchor_specs.extend(anchor_specs_for_scenario(scenario))
            surgeries.append(
                {
                    "id": surgery_id,
                    "scenario": f"fixtures/{surgery_id}/scenario.json",
                    "annotations": f"fixtures/{surgery_id}/annotations.csv",
                }
            )
        save_anchor_specs(out_dir / "anchors.json", anchor_specs)
        project_doc = {
            "v": 1,
            "surgeries": surgeries,
            "backends": {"mode": "simulated", "embedding_dim": 32},
            "thresholds": {
                "vad_gate": 0.3,
                "sim_threshold": 0.2,
                "tolerance_s": 5.0,
                "context_k": 5,
                "min_anchors": 5,
            },
            "pipeline": {"chunk_len_s": 180.0, "asr_run_count": asr_runs},
            "anchors": "anchors.json",
            "output_dir": "out",
        }
        (out_dir / "project.yaml").write_text(
            yaml.safe_dump(project_doc, sort_keys=True), encoding="utf-8"
        )
        click.echo(f"fixture project written to {out_dir}")
    except Exception as error:  # noqa: BLE001 - CLI boundary
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--surgery", "surgery_id", default=None)
@click.pass_context
def reconstruct(ctx, project_path, surgery_id):
    """Stage 1: VAD + diarization + gating + ASR -> utterances JSONL."""
    try:
        project = load_project(project_path)
        for runtime in _runtimes(project, surgery_id):
            counts = stage_reconstruct(project, runtime, stamp=ctx.obj["stamp"])
            click.echo(f"{runtime.surgery.id}: {counts}")
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--surgery", "surgery_id", default=None)
@click.option("--threshold", default=None, type=float, help="similarity threshold override")
@click.pass_context
def refine(ctx, project_path, surgery_id, threshold):
    """Stage 2: anchor-based role attribution and hallucination removal."""
    try:
        project = load_project(project_path)
        for runtime in _runtimes(project, surgery_id):
            counts = stage_refine(project, runtime, threshold=threshold, stamp=ctx.obj["stamp"])
            click.echo(f"{runtime.surgery.id}: {counts}")
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--surgery", "surgery_id", default=None)
@click.option(
    "--source",
    type=click.Choice([VARIANT_REFINED, VARIANT_DIALOGUE]),
    default=VARIANT_REFINED,
    show_default=True,
    help="classify the refined dialogue or the raw reconstruction",
)
@click.pass_context
def detect(ctx, project_path, surgery_id, source):
    """Task 1: per-turn feedback detection."""
    try:
        project = load_project(project_path)
        for runtime in _runtimes(project, surgery_id):
            counts = stage_detect(project, runtime, variant=source, stamp=ctx.obj["stamp"])
            click.echo(f"{runtime.surgery.id}: {counts}")
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--surgery", "surgery_id", default=None)
@click.pass_context
def assess(ctx, project_path, surgery_id):
    """Tasks 2-3: effectiveness and component classification of detected feedback."""
    try:
        project = load_project(project_path)
        for runtime in _runtimes(project, surgery_id):
            counts = stage_assess(project, runtime, stamp=ctx.obj["stamp"])
            click.echo(f"{runtime.surgery.id}: {counts}")
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.pass_context
def evaluate(ctx, project_path):
    """Score predictions against annotations; write report.json / report.txt."""
    try:
        project = load_project(project_path)
        runtimes = _runtimes(project, None)
        report = stage_evaluate(project, runtimes, stamp=ctx.obj["stamp"])
        click.echo(render_report_text(report))
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--vad", "which", flag_value="vad")
@click.option("--sim", "which", flag_value="sim")
@click.option("--surgery", "surgery_id", default=None)
def sweep(project_path, which, surgery_id):
    """Threshold sweeps: --vad (activity gate) or --sim (similarity cutoff)."""
    try:
        if which is None:
            raise ProjectError("pass --vad or --sim")
        project = load_project(project_path)
        runtime = _runtimes(project, surgery_id)[0]
        out_dir = project.surgery_dir(runtime.surgery.id) / "sweeps"
        out_dir.mkdir(parents=True, exist_ok=True)
        if which == "vad":
            rows = sweep_vad(project, runtime)
            (out_dir / "vad.json").write_text(
                json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            click.echo(render_sweep_table(rows, "F1"))
        else:
            rows = sweep_similarity(project, runtime)
            (out_dir / "sim.json").write_text(
                json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            click.echo(render_sweep_table(rows, "PLM"))
    except Exception as error:  # noqa: BLE001
        _fail(error)


@main.command()
@click.option("--project", "project_path", required=True, type=click.Path(path_type=Path))
@click.option("--surgery", "surgery_id", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
def serve(project_path, surgery_id, host, port):
    """Run the anchor-curation / refinement-review HTTP service."""
    try:
        import uvicorn

        from .service import create_app

        project = load_project(project_path)
        app = create_app(project, surgery_id)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except Exception as error:  # noqa: BLE001
        _fail(error)


if __name__ == "__main__":
    main()
