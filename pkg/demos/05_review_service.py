# Tour of the review service: build a fixture project with the CLI, run the
# pipeline, then exercise the HTTP API in-process (the same API `ordialogue
# serve` exposes and the browser UI consumes).

import tempfile
from pathlib import Path

from click.testing import CliRunner
from fastapi.testclient import TestClient

from ordialogue.cli import main
from ordialogue.project import load_project
from ordialogue.service import create_app

root = Path(tempfile.mkdtemp(prefix="ordialogue-demo-")) / "proj"
runner = CliRunner()
for args in (
    ["simulate", "--out", str(root), "--seed", "5", "--turns", "40",
     "--hallucination-rate", "0.5", "--noise-spans", "8"],
    ["reconstruct", "--project", str(root / "project.yaml")],
    ["refine", "--project", str(root / "project.yaml")],
):
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output

project = load_project(root / "project.yaml")
client = TestClient(create_app(project))

timeline = client.get("/timeline").json()
print(f"timeline: {len(timeline['segments'])} segments, "
      f"{len(timeline['anchors'])} anchors, version {timeline['version']}")

outcomes = {}
for segment in timeline["segments"]:
    outcomes[segment["outcome"]] = outcomes.get(segment["outcome"], 0) + 1
print(f"outcomes: {outcomes}")

matrix = client.get("/similarity-matrix").json()
print(f"similarity matrix: {len(matrix['labels'])}x{len(matrix['labels'])}, "
      f"diagonal starts {matrix['matrix'][0][0]}")

sweep = client.get("/similarity-sweep").json()
best = max((r for r in sweep["rows"] if r["plm"] is not None), key=lambda r: r["plm"])
print(f"best sweep threshold by PLM: {best['threshold']} (plm={best['plm']:.3f})")

# Raise the similarity cutoff and rerun stage 2; the dialogue reflects it.
version = timeline["version"]
job = client.post("/refine", json={"version": version, "threshold": 0.99}).json()
print(f"refine job {job['job_id']}: {client.get('/jobs/' + job['job_id']).json()['status']}")
print(f"turns after 0.99 cutoff: {len(client.get('/dialogue').json()['turns'])}")

job = client.post("/refine", json={"version": job["version"], "threshold": 0.2}).json()
turns = client.get("/dialogue").json()["turns"]
print(f"turns after restoring 0.2: {len(turns)}")

# Record a role override with an audit note; artifacts stay untouched, the
# export changes.
version = client.get("/timeline").json()["version"]
client.post("/segments/0/override",
            json={"role": "trainee", "note": "reviewed by hand", "version": version})
print(f"turn 0 role after override: {client.get('/dialogue').json()['turns'][0]['role']}")

print("\nrun it yourself:  ordialogue serve --project", root / "project.yaml")
