# Detect teaching feedback in the reconstructed dialogue and evaluate against
# timestamped human annotations with 5-second tolerance matching, then compare
# the with/without-refinement variants using McNemar's paired test.

from ordialogue.dialogue import assemble_dialogue
from ordialogue.evaluation import binary_metrics, compare_variants, match_predictions
from ordialogue.reconstruction import ReconstructionConfig, reconstruct_recording
from ordialogue.refinement import (
    RoleAttributedUtterance,
    RoleDecision,
    build_anchor_profile,
    embed_anchor_specs,
    refine_utterances,
)
from ordialogue.simulate import anchor_specs_for_scenario, make_scenario, simulate_surgery
from ordialogue.tasks import classify_components, classify_feedback, predict_effectiveness
from ordialogue.dialogue import context_window

scenario = make_scenario(
    surgery_id="demo", seed=11, n_events=60, hallucination_rate=0.5, n_noise_spans=12
)
sim = simulate_surgery(scenario)
cfg = ReconstructionConfig(asr_run_count=2)
utterances = reconstruct_recording(sim.audio, sim.vad, sim.dia, sim.asr, cfg, "demo")

specs = anchor_specs_for_scenario(scenario)
anchors = embed_anchor_specs(specs, sim.audio, sim.embedder)
trainer = build_anchor_profile("trainer", [a for a in anchors if a.role == "trainer"])
trainee = build_anchor_profile("trainee", [a for a in anchors if a.role == "trainee"])
refined = refine_utterances(list(utterances), sim.audio, trainer, trainee, sim.embedder)

# Two dialogue variants: raw reconstruction (roles unknown, hallucinations
# still present) and the refined stream.
raw_dialogue = assemble_dialogue(
    [RoleAttributedUtterance(u, RoleDecision(0.0, 0.0, "unknown")) for u in utterances]
)
refined_dialogue = assemble_dialogue(list(refined.kept))


def detect(dialogue):
    scored = []
    for turn in dialogue:
        prediction = classify_feedback(dialogue, turn.index, sim.classifier, k=5)
        scored.append((turn, prediction.is_feedback))
    return scored


scored_raw = detect(raw_dialogue)
scored_refined = detect(refined_dialogue)

annotations = list(sim.annotations)
for label, scored in (("raw dialogue", scored_raw), ("refined", scored_refined)):
    result = match_predictions(scored, annotations, tolerance_s=5.0)
    m = binary_metrics(result.counts)
    print(
        f"{label:>12}: tp={result.counts.tp} fp={result.counts.fp} fn={result.counts.fn}"
        f"  P={m.precision:.3f} R={m.recall:.3f} F1={m.f1:.3f}"
    )

comparison = compare_variants(scored_raw, scored_refined, annotations)
mc = comparison.mcnemar
print(
    f"\nMcNemar raw-vs-refined: b={mc.b} c={mc.c} statistic={mc.statistic:.3f}"
    f" p={mc.p_value:.4f} ({mc.method})"
)

# Downstream tasks run on the turns detection called feedback.
first_feedback = next(t for t, is_fb in scored_refined if is_fb)
window = context_window(refined_dialogue, first_feedback.index, k=5)
effectiveness = predict_effectiveness(window, sim.classifier)
components = classify_components(window, sim.classifier)
print(f"\nexample feedback turn: {first_feedback.text!r}")
print(f"  effectiveness: verbal_ack={effectiveness.verbal_ack} behavioral={effectiveness.behavioral_change}")
print(f"  components: anatomic={components.anatomic} procedural={components.procedural} technical={components.technical}")
