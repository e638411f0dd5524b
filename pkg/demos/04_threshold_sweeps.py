# Threshold selection: sweep the similarity cutoff against double-run labels
# (precision-leaning mean), and show the fixed-window VAD-only baseline whose
# recall is 1 by construction.

import numpy as np

from ordialogue.dialogue import extract_fixed_windows, extract_training_clip, vad_only_predict
from ordialogue.reconstruction import ReconstructionConfig, reconstruct_recording
from ordialogue.refinement import (
    build_anchor_profile,
    detect_trivial_hallucination,
    embed_anchor_specs,
    role_similarity,
    sweep_similarity_threshold,
)
from ordialogue.simulate import anchor_specs_for_scenario, make_scenario, simulate_surgery
from ordialogue.timeline import AudioChunk

# "Hard mode": cross-role embedding leakage makes the sweep non-trivial.
scenario = make_scenario(
    surgery_id="demo", seed=23, n_events=60, hallucination_rate=0.6, n_noise_spans=14,
    cross_role_leakage=0.35,
)
sim = simulate_surgery(scenario)
utterances = reconstruct_recording(
    sim.audio, sim.vad, sim.dia, sim.asr, ReconstructionConfig(asr_run_count=2), "demo"
)

specs = anchor_specs_for_scenario(scenario)
anchors = embed_anchor_specs(specs, sim.audio, sim.embedder)
trainer = build_anchor_profile("trainer", [a for a in anchors if a.role == "trainer"])
trainee = build_anchor_profile("trainee", [a for a in anchors if a.role == "trainee"])

# Labels come from the double-run detector; the sweep scores the
# "flag as hallucination below threshold" rule against them.
labeled = []
for utterance in utterances:
    embedding = sim.embedder.embed(sim.audio, utterance.span)
    sims = (role_similarity(embedding, trainer), role_similarity(embedding, trainee))
    labeled.append((sims, detect_trivial_hallucination(utterance)))

print("similarity-threshold sweep (score = 2*precision + recall/2):")
print(f"{'thresh':>7} {'precision':>10} {'recall':>8} {'plm':>7}")
for row in sweep_similarity_threshold(labeled):
    if row.note:
        print(f"{row.threshold:>7} {row.note}")
        continue
    print(f"{row.threshold:>7} {row.precision:>10.3f} {row.recall:>8.3f} {row.plm:>7.3f}")

# Fixed-window baseline: 10-second windows moving by 5 seconds; a window is
# "feedback" whenever it contains speech at all. Recall is perfect, precision
# is whatever fraction of OR talk happens to be feedback. The gate must be low
# enough that a window half-covering an utterance still fires.
windows = extract_fixed_windows(scenario.duration_s, window_len_s=10.0, overlap_s=5.0)
chunk = AudioChunk("demo", 0, 0.0, sim.audio)
activity = sim.vad.activity(chunk)
predictions = vad_only_predict(windows, activity, gate=0.1)
positive = sum(predictions)
print(f"\nVAD-only baseline: {positive}/{len(windows)} windows predicted positive")

feedback_times = [a.time_s for a in sim.annotations]
hit = sum(
    any(w.start_s <= t <= w.end_s for w in (w for w, p in zip(windows, predictions) if p))
    for t in feedback_times
)
print(f"baseline recall over {len(feedback_times)} annotations: {hit / len(feedback_times):.2f}")

# Training-clip extraction used to build fixed-window classifier datasets:
# 3 s before the annotation (timing slack) and 7 s after (delivery).
clip = extract_training_clip(feedback_times[0])
print(f"training clip for annotation at {feedback_times[0]:.2f}s: [{clip.start_s:.2f}, {clip.end_s:.2f}]")
