# Remove ASR hallucinations and identify trainer/trainee speaking turns by
# comparing segment embeddings against few-shot anchor voice samples.

import numpy as np

from ordialogue.reconstruction import ReconstructionConfig, reconstruct_recording
from ordialogue.refinement import (
    anchor_similarity_matrix,
    build_anchor_profile,
    detect_trivial_hallucination,
    embed_anchor_specs,
    refine_utterances,
)
from ordialogue.simulate import anchor_specs_for_scenario, make_scenario, simulate_surgery

# Half the noise spans turn into spurious diarized segments whose "speech" is
# operating-room noise; the ASR hears short affirmations in them.
scenario = make_scenario(
    surgery_id="demo", seed=11, n_events=60, hallucination_rate=0.5, n_noise_spans=12
)
sim = simulate_surgery(scenario)
cfg = ReconstructionConfig(asr_run_count=2)
utterances = reconstruct_recording(sim.audio, sim.vad, sim.dia, sim.asr, cfg, "demo")
print(f"{len(utterances)} utterances ({len(sim.spurious_spans)} injected hallucinations)")

# Five anchors per person, embedded once. In a real project these spans are
# curated in the review UI; the fixture uses the first clean turns per role.
specs = anchor_specs_for_scenario(scenario, per_role=5)
anchors = embed_anchor_specs(specs, sim.audio, sim.embedder)
trainer = build_anchor_profile("trainer", [a for a in anchors if a.role == "trainer"])
trainee = build_anchor_profile("trainee", [a for a in anchors if a.role == "trainee"])

labels, matrix = anchor_similarity_matrix([trainer, trainee])
print("\nanchor-vs-anchor cosine similarity (within-role blocks should be bright):")
print("  " + " ".join(f"{l:>9}" for l in labels[:5]) + " ...")
with np.printoptions(precision=2, suppress=True):
    print(matrix)

# Each segment's embedding is averaged against both profiles; below 0.2 for
# both means hallucination (or another speaker), otherwise argmax wins.
result = refine_utterances(list(utterances), sim.audio, trainer, trainee, sim.embedder, 0.2)
print(f"\nkept {len(result.kept)}, removed {len(result.removed)} as hallucinations")
for removed in result.removed[:3]:
    print(
        f"  removed [{removed.span.start_s:7.2f}s] sims=({removed.decision.sim_trainer:+.3f},"
        f" {removed.decision.sim_trainee:+.3f}) text={removed.text!r}"
    )

# The double-ASR-run baseline flags the same segments: run the recognizer
# twice and treat differing outputs as hallucinations.
double_run_flags = [detect_trivial_hallucination(u) for u in utterances]
print(f"\ndouble-run baseline flags {sum(double_run_flags)} segments")
assert sum(double_run_flags) == len(result.removed)
