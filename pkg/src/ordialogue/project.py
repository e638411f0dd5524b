"""Project configuration and run manifests.

A project is one human-editable YAML file naming the surgery inputs (scenario
fixtures or WAV recordings), backend descriptors, thresholds, the anchor-set
path, and the output directory. Secrets are never read from the file; remote
endpoints name the environment variable that holds their token.

Manifests record a config snapshot, its hash, per-stage versions and counts.
Wall-clock timestamps are opt-in (stamp=True): deterministic pipelines must
produce byte-identical artifact trees by default.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .records import dumps_canonical


class ProjectError(ValueError):
    pass


@dataclass(frozen=True)
class SurgeryInput:
    id: str
    scenario_path: Path | None = None
    audio_path: Path | None = None
    annotations_path: Path | None = None

    def __post_init__(self) -> None:
        if (self.scenario_path is None) == (self.audio_path is None):
            raise ProjectError(
                f"surgery {self.id!r} needs exactly one of scenario/audio inputs"
            )


@dataclass(frozen=True)
class Thresholds:
    vad_gate: float = 0.3
    sim_threshold: float = 0.2
    tolerance_s: float = 5.0
    context_k: int = 5
    min_anchors: int = 5

    def __post_init__(self) -> None:
        if not 0.0 <= self.vad_gate <= 1.0:
            raise ProjectError("vad_gate must lie in [0, 1]")
        if not 0.0 <= self.sim_threshold <= 1.0:
            raise ProjectError("sim_threshold must lie in [0, 1]")
        if self.tolerance_s < 0:
            raise ProjectError("tolerance_s must be non-negative")
        if self.context_k < 0 or self.min_anchors < 1:
            raise ProjectError("context_k must be >= 0 and min_anchors >= 1")


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    model: str = ""
    max_in_flight: int = 1
    timeout_s: float = 60.0
    auth_env: str | None = None  # name of the env var holding the secret


@dataclass(frozen=True)
class BackendsConfig:
    mode: str = "simulated"  # simulated | remote
    embedding_dim: int = 32
    endpoints: dict[str, EndpointConfig] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("simulated", "remote"):
            raise ProjectError(f"unknown backend mode {self.mode!r}")


@dataclass(frozen=True)
class PipelineConfig:
    chunk_len_s: float = 180.0
    asr_run_count: int = 2


@dataclass(frozen=True)
class ProjectConfig:
    path: Path
    surgeries: tuple[SurgeryInput, ...]
    backends: BackendsConfig
    thresholds: Thresholds
    pipeline: PipelineConfig
    anchors_path: Path
    output_dir: Path

    def surgery(self, surgery_id: str | None) -> SurgeryInput:
        if surgery_id is None:
            return self.surgeries[0]
        for surgery in self.surgeries:
            if surgery.id == surgery_id:
                return surgery
        raise ProjectError(f"no surgery {surgery_id!r} in project")

    def surgery_dir(self, surgery_id: str) -> Path:
        return self.output_dir / surgery_id

    def snapshot(self) -> dict:
        """Config as plain data, paths relative to the project file."""
        base = self.path.parent

        def rel(p: Path | None) -> str | None:
            if p is None:
                return None
            try:
                return str(p.relative_to(base))
            except ValueError:
                return str(p)

        return {
            "v": 1,
            "surgeries": [
                {
                    "id": s.id,
                    "scenario": rel(s.scenario_path),
                    "audio": rel(s.audio_path),
                    "annotations": rel(s.annotations_path),
                }
                for s in self.surgeries
            ],
            "backends": {
                "mode": self.backends.mode,
                "embedding_dim": self.backends.embedding_dim,
                "endpoints": {
                    kind: {
                        "url": e.url,
                        "model": e.model,
                        "max_in_flight": e.max_in_flight,
                        "timeout_s": e.timeout_s,
                        "auth_env": e.auth_env,
                    }
                    for kind, e in sorted(self.backends.endpoints.items())
                },
            },
            "thresholds": {
                "vad_gate": self.thresholds.vad_gate,
                "sim_threshold": self.thresholds.sim_threshold,
                "tolerance_s": self.thresholds.tolerance_s,
                "context_k": self.thresholds.context_k,
                "min_anchors": self.thresholds.min_anchors,
            },
            "pipeline": {
                "chunk_len_s": self.pipeline.chunk_len_s,
                "asr_run_count": self.pipeline.asr_run_count,
            },
            "anchors": rel(self.anchors_path),
            "output_dir": rel(self.output_dir),
        }


def config_hash(snapshot: dict) -> str:
    return hashlib.sha256(dumps_canonical(snapshot).encode("utf-8")).hexdigest()


def load_project(path: str | os.PathLike) -> ProjectConfig:
    path = Path(path).resolve()
    if not path.exists():
        raise ProjectError(f"project file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    base = path.parent

    def resolve(raw: str | None) -> Path | None:
        return (base / raw).resolve() if raw else None

    surgeries = []
    for item in doc.get("surgeries", []):
        surgery = SurgeryInput(
            id=str(item["id"]),
            scenario_path=resolve(item.get("scenario")),
            audio_path=resolve(item.get("audio")),
            annotations_path=resolve(item.get("annotations")),
        )
        for label, p in (
            ("scenario", surgery.scenario_path),
            ("audio", surgery.audio_path),
            ("annotations", surgery.annotations_path),
        ):
            if p is not None and not p.exists():
                raise ProjectError(f"surgery {surgery.id!r}: {label} path missing: {p}")
        surgeries.append(surgery)
    if not surgeries:
        raise ProjectError("project defines no surgeries")

    backends_doc = doc.get("backends", {})
    endpoints = {
        kind: EndpointConfig(
            url=str(e["url"]),
            model=str(e.get("model", "")),
            max_in_flight=int(e.get("max_in_flight", 1)),
            timeout_s=float(e.get("timeout_s", 60.0)),
            auth_env=e.get("auth_env"),
        )
        for kind, e in (backends_doc.get("endpoints") or {}).items()
    }
    backends = BackendsConfig(
        mode=backends_doc.get("mode", "simulated"),
        embedding_dim=int(backends_doc.get("embedding_dim", 32)),
        endpoints=endpoints,
    )

    thresholds_doc = doc.get("thresholds", {})
    thresholds = Thresholds(
        vad_gate=float(thresholds_doc.get("vad_gate", 0.3)),
        sim_threshold=float(thresholds_doc.get("sim_threshold", 0.2)),
        tolerance_s=float(thresholds_doc.get("tolerance_s", 5.0)),
        context_k=int(thresholds_doc.get("context_k", 5)),
        min_anchors=int(thresholds_doc.get("min_anchors", 5)),
    )
    pipeline_doc = doc.get("pipeline", {})
    pipeline = PipelineConfig(
        chunk_len_s=float(pipeline_doc.get("chunk_len_s", 180.0)),
        asr_run_count=int(pipeline_doc.get("asr_run_count", 2)),
    )

    anchors_raw = doc.get("anchors", "anchors.json")
    output_raw = doc.get("output_dir", "out")
    return ProjectConfig(
        path=path,
        surgeries=tuple(surgeries),
        backends=backends,
        thresholds=thresholds,
        pipeline=pipeline,
        anchors_path=(base / anchors_raw).resolve(),
        output_dir=(base / output_raw).resolve(),
    )


# ---------------------------------------------------------------------------
# Run manifests
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def update_manifest(
    directory: str | os.PathLike,
    stage: str,
    project: ProjectConfig,
    counts: dict[str, int],
    *,
    stamp: bool = False,
) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest_path = directory / MANIFEST_NAME
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    else:
        manifest = {"v": 1, "stages": {}}
    snapshot = project.snapshot()
    manifest["config"] = snapshot
    manifest["config_hash"] = config_hash(snapshot)
    stage_entry: dict = {"version": __version__, "counts": dict(sorted(counts.items()))}
    if stamp:
        stage_entry["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    manifest["stages"][stage] = stage_entry
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def verify_manifest(directory: str | os.PathLike) -> bool:
    manifest_path = Path(directory) / MANIFEST_NAME
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    return config_hash(manifest["config"]) == manifest["config_hash"]
