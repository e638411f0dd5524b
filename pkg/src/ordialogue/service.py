"""Local review HTTP service: timeline inspection, anchor curation,
refinement reruns, role overrides, and threshold tuning.

Single-writer model: every mutation carries the current version token and
bumps it; stale tokens get 409. Role overrides are an overlay applied when
dialogue is served, never a rewrite of pipeline artifacts. Refine jobs run
to completion before the job id is returned; clients poll /jobs/{id} for the
outcome either way.
"""

from __future__ import annotations

import io
import json
import os
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel

from .audio_io import save_wav
from .dialogue import turn_from_record
from .pipeline import (
    SurgeryRuntime,
    build_runtime,
    stage_refine,
    sweep_similarity,
)
from .project import ProjectConfig, ProjectError
from .records import read_jsonl
from .refinement import (
    AnchorSpec,
    EmbeddingCache,
    anchor_similarity_matrix,
    build_anchor_profile,
    embed_anchor_specs,
    load_anchor_specs,
    save_anchor_specs,
)
from .timeline import AudioBuffer

MAX_TIMELINE_BUCKETS = 2000
ROLES = ("trainer", "trainee")
OVERRIDE_ROLES = ("trainer", "trainee", "unknown")


class AnchorBody(BaseModel):
    role: str
    start_s: float
    end_s: float
    label: str = ""
    version: int


class VersionBody(BaseModel):
    version: int


class RefineBody(BaseModel):
    version: int
    threshold: float | None = None


class OverrideBody(BaseModel):
    role: str
    note: str = ""
    version: int


class ThresholdsBody(BaseModel):
    sim_threshold: float
    version: int


class ReviewState:
    """Mutable service state for one surgery, guarded by a single lock."""

    def __init__(self, project: ProjectConfig, runtime: SurgeryRuntime) -> None:
        self.project = project
        self.runtime = runtime
        self.surgery_id = runtime.surgery.id
        self.out_dir = project.surgery_dir(self.surgery_id)
        if not (self.out_dir / "utterances.jsonl").exists():
            raise ProjectError(
                f"no reconstruction artifacts for {self.surgery_id!r}; "
                "run `ordialogue reconstruct` before serving"
            )
        self.lock = threading.Lock()
        self.version = 1
        self.sim_threshold = project.thresholds.sim_threshold
        self.jobs: dict[str, dict] = {}
        self._job_counter = 0
        self.overrides: dict[int, dict] = {}
        self._overrides_path = self.out_dir / "overrides.json"
        if self._overrides_path.exists():
            raw = json.loads(self._overrides_path.read_text(encoding="utf-8"))
            self.overrides = {int(k): v for k, v in raw.items()}
        self.anchors: list[dict] = []
        self._anchor_counter = 0
        if project.anchors_path.exists():
            for spec in load_anchor_specs(project.anchors_path):
                if spec.recording == self.surgery_id:
                    self._anchor_counter += 1
                    self.anchors.append(
                        {"id": f"a{self._anchor_counter}", "spec": spec}
                    )
        self.reload_artifacts()

    # -- persistence ------------------------------------------------------

    def reload_artifacts(self) -> None:
        self.utterances = read_jsonl(self.out_dir / "utterances.jsonl")
        refined_path = self.out_dir / "refined.jsonl"
        removed_path = self.out_dir / "removed.jsonl"
        self.refined = read_jsonl(refined_path) if refined_path.exists() else []
        self.removed = read_jsonl(removed_path) if removed_path.exists() else []
        dialogue_path = self.out_dir / "dialogue.jsonl"
        self.dialogue = read_jsonl(dialogue_path) if dialogue_path.exists() else []

    def persist_anchors(self) -> None:
        others = []
        if self.project.anchors_path.exists():
            others = [
                s
                for s in load_anchor_specs(self.project.anchors_path)
                if s.recording != self.surgery_id
            ]
        save_anchor_specs(
            self.project.anchors_path, others + [a["spec"] for a in self.anchors]
        )

    def persist_overrides(self) -> None:
        self._overrides_path.parent.mkdir(parents=True, exist_ok=True)
        self._overrides_path.write_text(
            json.dumps({str(k): v for k, v in sorted(self.overrides.items())}, indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )

    # -- helpers -----------------------------------------------------------

    def check_version(self, version: int) -> None:
        if version != self.version:
            raise HTTPException(
                status_code=409,
                detail={"message": "stale version token", "current_version": self.version},
            )

    def bump(self) -> int:
        self.version += 1
        return self.version

    def segment_rows(self) -> list[dict]:
        decisions = {}
        for record in list(self.refined) + list(self.removed):
            decisions[(record["start_s"], record["end_s"])] = record
        rows = []
        for i, record in enumerate(self.utterances):
            decision = decisions.get((record["start_s"], record["end_s"]))
            rows.append(
                {
                    "id": i,
                    "start_s": record["start_s"],
                    "end_s": record["end_s"],
                    "text": record["text"],
                    "mean_vad": record["mean_vad"],
                    "raw_speaker_label": record["raw_speaker_label"],
                    "outcome": decision["role"] if decision else None,
                    "sim_trainer": decision["sim_trainer"] if decision else None,
                    "sim_trainee": decision["sim_trainee"] if decision else None,
                }
            )
        return rows

    def anchor_profiles(self):
        cache = EmbeddingCache(self.out_dir / "embeddings.bin")
        specs = [a["spec"] for a in self.anchors]
        embedded = embed_anchor_specs(specs, self.runtime.audio, self.runtime.embedder, cache)
        cache.save()
        profiles = []
        for role in ROLES:
            role_anchors = [a for a in embedded if a.role == role]
            if role_anchors:
                profiles.append(build_anchor_profile(role, role_anchors, allow_fewer=True))
        return profiles

    def downsampled_activity(self) -> list[dict]:
        doc = json.loads((self.out_dir / "activity.json").read_text(encoding="utf-8"))
        total_frames = sum(len(c["values"]) for c in doc["chunks"])
        stride = max(1, total_frames // MAX_TIMELINE_BUCKETS)
        points = []
        for chunk in doc["chunks"]:
            values = chunk["values"]
            frame = chunk["frame_len_s"]
            origin = chunk["origin_s"]
            for i in range(0, len(values), stride):
                window = values[i : i + stride]
                points.append(
                    {
                        "t0": origin + i * frame,
                        "t1": origin + min(i + stride, len(values)) * frame,
                        "v": max(window),
                    }
                )
        return points


def create_app(project: ProjectConfig, surgery_id: str | None = None) -> FastAPI:
    runtime = build_runtime(project, project.surgery(surgery_id))
    state = ReviewState(project, runtime)
    app = FastAPI(title="dialogue review service")
    app.state.review = state

    def validate_span(start_s: float, end_s: float) -> None:
        duration = state.runtime.audio.duration_s
        if not (0.0 <= start_s < end_s <= duration):
            raise HTTPException(
                status_code=422,
                detail={
                    "message": "invalid span",
                    "start_s": start_s,
                    "end_s": end_s,
                    "recording_duration_s": duration,
                },
            )

    @app.get("/timeline")
    def timeline():
        return {
            "surgery_id": state.surgery_id,
            "duration_s": state.runtime.audio.duration_s,
            "version": state.version,
            "simulation": state.runtime.simulated,
            "activity": state.downsampled_activity(),
            "segments": state.segment_rows(),
            "anchors": [
                {
                    "id": a["id"],
                    "role": a["spec"].role,
                    "start_s": a["spec"].start_s,
                    "end_s": a["spec"].end_s,
                    "label": a["spec"].label,
                }
                for a in state.anchors
            ],
        }

    @app.get("/segments/{segment_id}")
    def segment_detail(segment_id: int):
        rows = state.segment_rows()
        if not 0 <= segment_id < len(rows):
            raise HTTPException(status_code=404, detail="no such segment")
        row = rows[segment_id]
        row["override"] = state.overrides.get(segment_id)
        return row

    @app.get("/segments/{segment_id}/audio")
    def segment_audio(segment_id: int):
        rows = state.segment_rows()
        if not 0 <= segment_id < len(rows):
            raise HTTPException(status_code=404, detail="no such segment")
        if state.runtime.simulated or not isinstance(state.runtime.audio, AudioBuffer):
            raise HTTPException(status_code=404, detail="no audio in simulation mode")
        row = rows[segment_id]
        clip = state.runtime.audio.slice(row["start_s"], row["end_s"])
        buffer = io.BytesIO()
        save_wav(buffer, clip)
        return Response(content=buffer.getvalue(), media_type="audio/wav")

    @app.get("/anchors")
    def list_anchors():
        counts = {role: 0 for role in ROLES}
        for a in state.anchors:
            counts[a["spec"].role] += 1
        return {
            "version": state.version,
            "min_anchors": project.thresholds.min_anchors,
            "counts": counts,
            "anchors": [
                {
                    "id": a["id"],
                    "role": a["spec"].role,
                    "start_s": a["spec"].start_s,
                    "end_s": a["spec"].end_s,
                    "label": a["spec"].label,
                }
                for a in state.anchors
            ],
        }

    @app.post("/anchors", status_code=201)
    def add_anchor(body: AnchorBody):
        with state.lock:
            state.check_version(body.version)
            if body.role not in ROLES:
                raise HTTPException(status_code=422, detail={"message": "invalid role"})
            validate_span(body.start_s, body.end_s)
            state._anchor_counter += 1
            anchor_id = f"a{state._anchor_counter}"
            state.anchors.append(
                {
                    "id": anchor_id,
                    "spec": AnchorSpec(
                        role=body.role,
                        recording=state.surgery_id,
                        start_s=body.start_s,
                        end_s=body.end_s,
                        label=body.label,
                    ),
                }
            )
            state.persist_anchors()
            return {"anchor_id": anchor_id, "version": state.bump()}

    @app.delete("/anchors/{anchor_id}")
    def remove_anchor(anchor_id: str, body: VersionBody):
        with state.lock:
            state.check_version(body.version)
            before = len(state.anchors)
            state.anchors = [a for a in state.anchors if a["id"] != anchor_id]
            if len(state.anchors) == before:
                raise HTTPException(status_code=404, detail="no such anchor")
            state.persist_anchors()
            return {"version": state.bump()}

    @app.post("/refine", status_code=202)
    def rerun_refine(body: RefineBody):
        with state.lock:
            state.check_version(body.version)
            if body.threshold is not None and not 0.0 <= body.threshold <= 1.0:
                raise HTTPException(status_code=422, detail={"message": "invalid threshold"})
            state._job_counter += 1
            job_id = f"job{state._job_counter}"
            threshold = body.threshold if body.threshold is not None else state.sim_threshold
            job = {"id": job_id, "status": "running", "detail": None}
            state.jobs[job_id] = job
            try:
                counts = stage_refine(state.project, state.runtime, threshold=threshold)
                state.sim_threshold = threshold
                state.reload_artifacts()
                job["status"] = "done"
                job["detail"] = counts
            except Exception as error:  # noqa: BLE001 - job boundary
                job["status"] = "error"
                job["detail"] = str(error)
            version = state.bump()
            return {"job_id": job_id, "version": version}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="no such job")
        return job

    @app.post("/segments/{segment_id}/override")
    def override_segment(segment_id: int, body: OverrideBody):
        with state.lock:
            state.check_version(body.version)
            if body.role not in OVERRIDE_ROLES:
                raise HTTPException(status_code=422, detail={"message": "invalid role"})
            if not 0 <= segment_id < len(state.utterances):
                raise HTTPException(status_code=404, detail="no such segment")
            state.overrides[segment_id] = {"role": body.role, "note": body.note}
            state.persist_overrides()
            return {"version": state.bump()}

    @app.get("/dialogue")
    def dialogue():
        # overrides are keyed by segment id; map to turns via (start, end)
        override_by_span = {}
        for segment_id, override in state.overrides.items():
            if 0 <= segment_id < len(state.utterances):
                record = state.utterances[segment_id]
                override_by_span[(record["start_s"], record["end_s"])] = override
        turns = []
        for record in state.dialogue:
            turn = dict(record)
            override = override_by_span.get((record["start_s"], record["end_s"]))
            if override:
                turn["role"] = override["role"]
                turn["override_note"] = override["note"]
            turns.append(turn)
        return {"version": state.version, "turns": turns}

    @app.get("/similarity-matrix")
    def similarity_matrix():
        profiles = state.anchor_profiles()
        if not profiles:
            return {"version": state.version, "labels": [], "matrix": []}
        labels, matrix = anchor_similarity_matrix(profiles)
        return {
            "version": state.version,
            "labels": labels,
            "matrix": [[round(float(v), 6) for v in row] for row in matrix],
        }

    @app.get("/similarity-sweep")
    def similarity_sweep():
        try:
            rows = sweep_similarity(state.project, state.runtime)
        except (ProjectError, ValueError) as error:
            # not computable yet (anchors missing/short, or single ASR runs)
            raise HTTPException(status_code=422, detail={"message": str(error)})
        return {"version": state.version, "rows": rows}

    @app.get("/thresholds")
    def get_thresholds():
        return {
            "version": state.version,
            "vad_gate": project.thresholds.vad_gate,
            "sim_threshold": state.sim_threshold,
            "tolerance_s": project.thresholds.tolerance_s,
            "context_k": project.thresholds.context_k,
            "min_anchors": project.thresholds.min_anchors,
        }

    @app.put("/thresholds")
    def put_thresholds(body: ThresholdsBody):
        with state.lock:
            state.check_version(body.version)
            if not 0.0 <= body.sim_threshold <= 1.0:
                raise HTTPException(status_code=422, detail={"message": "invalid threshold"})
            state.sim_threshold = body.sim_threshold
            return {"version": state.bump(), "sim_threshold": state.sim_threshold}

    ui_dir = _find_ui_dir()
    if ui_dir is not None:  # pragma: no cover - exercised via the frontend build
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _find_ui_dir() -> Path | None:
    """Locate the built browser UI: explicit env var, repo checkout (editable
    install), or the working directory."""
    candidates = []
    if os.environ.get("ORDIALOGUE_UI_DIR"):
        candidates.append(Path(os.environ["ORDIALOGUE_UI_DIR"]))
    candidates.append(Path(__file__).resolve().parent.parent.parent / "frontend" / "dist")
    candidates.append(Path.cwd() / "frontend" / "dist")
    for candidate in candidates:
        if (candidate / "index.html").exists():
            return candidate
    return None
