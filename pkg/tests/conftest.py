import pytest

from ordialogue.reconstruction import ReconstructionConfig, reconstruct_recording


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in getattr(report, "nodeid", ""):
                rows.append((report.nodeid.split("::")[-1], outcome))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in rows:
            terminalreporter.write_line(
                f"[{'PASS' if outcome == 'passed' else 'FAIL'}] {name}"
            )
from ordialogue.refinement import build_anchor_profile, embed_anchor_specs
from ordialogue.simulate import (
    anchor_specs_for_scenario,
    make_scenario,
    simulate_surgery,
)


@pytest.fixture(scope="session")
def clean_scenario():
    """Zero-noise scripted surgery with 60 turns."""
    return make_scenario(surgery_id="sim-clean", seed=7, n_events=60)


@pytest.fixture(scope="session")
def noisy_scenario():
    """Scripted surgery with injected hallucination segments."""
    return make_scenario(
        surgery_id="sim-noisy",
        seed=11,
        n_events=60,
        hallucination_rate=0.5,
        n_noise_spans=12,
    )


@pytest.fixture(scope="session")
def clean_sim(clean_scenario):
    return simulate_surgery(clean_scenario)


@pytest.fixture(scope="session")
def noisy_sim(noisy_scenario):
    return simulate_surgery(noisy_scenario)


def run_reconstruction(sim, asr_run_count=2):
    cfg = ReconstructionConfig(asr_run_count=asr_run_count)
    return reconstruct_recording(
        sim.audio, sim.vad, sim.dia, sim.asr, cfg, sim.scenario.surgery_id
    )


def build_profiles(sim):
    specs = anchor_specs_for_scenario(sim.scenario)
    anchors = embed_anchor_specs(specs, sim.audio, sim.embedder)
    trainer = build_anchor_profile("trainer", [a for a in anchors if a.role == "trainer"])
    trainee = build_anchor_profile("trainee", [a for a in anchors if a.role == "trainee"])
    return trainer, trainee
