import json

import pytest
import yaml
from click.testing import CliRunner

from ordialogue.cli import main
from ordialogue.project import (
    ProjectError,
    Thresholds,
    config_hash,
    load_project,
    update_manifest,
    verify_manifest,
)


@pytest.fixture
def fixture_project(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["simulate", "--out", str(tmp_path / "proj"), "--seed", "3"])
    assert result.exit_code == 0, result.output
    return tmp_path / "proj" / "project.yaml"


class TestLoadProject:
    def test_loads_generated_project(self, fixture_project):
        project = load_project(fixture_project)
        assert project.surgeries[0].id == "sim-001"
        assert project.backends.mode == "simulated"
        assert project.thresholds.sim_threshold == 0.2
        assert project.anchors_path.exists()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProjectError, match="not found"):
            load_project(tmp_path / "nope.yaml")

    def test_missing_scenario_path(self, tmp_path):
        doc = {
            "surgeries": [{"id": "s1", "scenario": "absent.json"}],
        }
        path = tmp_path / "project.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ProjectError, match="path missing"):
            load_project(path)

    def test_requires_exactly_one_input(self, tmp_path):
        doc = {"surgeries": [{"id": "s1"}]}
        path = tmp_path / "project.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ProjectError, match="exactly one"):
            load_project(path)

    def test_no_surgeries(self, tmp_path):
        path = tmp_path / "project.yaml"
        path.write_text(yaml.safe_dump({"surgeries": []}))
        with pytest.raises(ProjectError, match="no surgeries"):
            load_project(path)

    def test_unknown_surgery_lookup(self, fixture_project):
        project = load_project(fixture_project)
        with pytest.raises(ProjectError, match="no surgery"):
            project.surgery("sim-999")


class TestThresholds:
    def test_ranges_enforced(self):
        with pytest.raises(ProjectError):
            Thresholds(vad_gate=1.5)
        with pytest.raises(ProjectError):
            Thresholds(sim_threshold=-0.1)
        with pytest.raises(ProjectError):
            Thresholds(tolerance_s=-1)


class TestManifest:
    def test_update_and_verify(self, fixture_project, tmp_path):
        project = load_project(fixture_project)
        directory = tmp_path / "artifacts"
        manifest = update_manifest(directory, "reconstruct", project, {"utterances": 10})
        assert manifest["config_hash"] == config_hash(project.snapshot())
        assert verify_manifest(directory)
        assert manifest["stages"]["reconstruct"]["counts"] == {"utterances": 10}
        assert "created_at" not in manifest["stages"]["reconstruct"]

    def test_stamp_adds_timestamp(self, fixture_project, tmp_path):
        project = load_project(fixture_project)
        directory = tmp_path / "artifacts"
        manifest = update_manifest(directory, "refine", project, {}, stamp=True)
        assert "created_at" in manifest["stages"]["refine"]

    def test_tampered_config_fails_verification(self, fixture_project, tmp_path):
        project = load_project(fixture_project)
        directory = tmp_path / "artifacts"
        update_manifest(directory, "reconstruct", project, {})
        manifest_path = directory / "manifest.json"
        doc = json.loads(manifest_path.read_text())
        doc["config"]["thresholds"]["vad_gate"] = 0.9
        manifest_path.write_text(json.dumps(doc))
        assert not verify_manifest(directory)

    def test_snapshot_uses_relative_paths(self, fixture_project):
        project = load_project(fixture_project)
        snapshot = project.snapshot()
        assert snapshot["surgeries"][0]["scenario"] == "fixtures/sim-001/scenario.json"
        assert snapshot["anchors"] == "anchors.json"
