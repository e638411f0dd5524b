import numpy as np
import pytest

from conftest import build_profiles, run_reconstruction
from ordialogue.dialogue import assemble_dialogue
from ordialogue.prompts import PromptTask, build_prompt, render_turn_line
from ordialogue.refinement import cosine_similarity, refine_utterances
from ordialogue.simulate import (
    FILLER_TEXTS,
    ScenarioAudio,
    ScriptedEvent,
    SurgeryScenario,
    anchor_specs_for_scenario,
    load_scenario,
    make_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    simulate_surgery,
    spurious_segment_spans,
)
from ordialogue.timeline import AudioChunk, TimeSpan


class TestScenarioGeneration:
    def test_same_seed_is_identical(self):
        a = make_scenario(seed=7, n_events=40, hallucination_rate=0.3, n_noise_spans=6)
        b = make_scenario(seed=7, n_events=40, hallucination_rate=0.3, n_noise_spans=6)
        assert scenario_to_dict(a) == scenario_to_dict(b)

    def test_different_seed_differs(self):
        a = make_scenario(seed=7, n_events=40)
        b = make_scenario(seed=8, n_events=40)
        assert scenario_to_dict(a) != scenario_to_dict(b)

    def test_events_avoid_chunk_boundaries(self):
        scenario = make_scenario(seed=3, n_events=80)
        for event in scenario.events:
            assert int(event.time_s // 180) == int(event.span.end_s // 180)

    def test_unique_texts(self):
        scenario = make_scenario(seed=5, n_events=70)
        texts = [e.text for e in scenario.events]
        assert len(set(texts)) == len(texts)

    def test_noise_spans_disjoint_from_events(self):
        scenario = make_scenario(seed=9, n_events=50, n_noise_spans=10)
        assert len(scenario.noise_spans) == 10
        for noise in scenario.noise_spans:
            for event in scenario.events:
                overlap = min(noise.end_s, event.span.end_s) - max(
                    noise.start_s, event.span.start_s
                )
                assert overlap <= 0

    def test_json_round_trip(self, tmp_path):
        scenario = make_scenario(seed=4, n_events=30, hallucination_rate=0.4, n_noise_spans=5)
        path = tmp_path / "scenario.json"
        save_scenario(path, scenario)
        assert load_scenario(path) == scenario

    def test_validation(self):
        event = ScriptedEvent(time_s=100.0, role="trainer", text="x", duration_s=5.0)
        with pytest.raises(ValueError, match="beyond"):
            SurgeryScenario(
                surgery_id="s", seed=1, duration_s=102.0, events=(event,)
            )
        early = ScriptedEvent(time_s=10.0, role="trainer", text="a")
        late = ScriptedEvent(time_s=5.0, role="trainee", text="b")
        with pytest.raises(ValueError, match="ordered"):
            SurgeryScenario(surgery_id="s", seed=1, duration_s=100.0, events=(early, late))


class TestSpuriousPlan:
    def test_zero_rate_adds_nothing(self, clean_sim):
        assert clean_sim.spurious_spans == ()
        utterances = run_reconstruction(clean_sim)
        assert len(utterances) == len(clean_sim.scenario.events)

    def test_half_rate_fixed_seed_exact_count(self):
        scenario = make_scenario(seed=11, n_events=60, hallucination_rate=0.5, n_noise_spans=12)
        spans = spurious_segment_spans(scenario)
        assert len(spans) == 7  # frozen for this seed; ~hallucination_rate * spans
        assert spans == spurious_segment_spans(scenario)

    def test_rate_one_emits_every_noise_span(self):
        scenario = make_scenario(seed=2, n_events=40, hallucination_rate=1.0, n_noise_spans=8)
        assert len(spurious_segment_spans(scenario)) == 8


class TestSimulatedBackends:
    def test_deterministic_outputs(self, noisy_sim):
        first = run_reconstruction(noisy_sim)
        second = run_reconstruction(noisy_sim)
        assert first == second

    def test_vad_active_inside_speech(self, clean_sim):
        chunk = AudioChunk("s", 0, 0.0, clean_sim.audio.slice(0.0, 180.0))
        activity = clean_sim.vad.activity(chunk)
        event = clean_sim.scenario.events[0]
        from ordialogue.timeline import mean_activity

        assert mean_activity(activity, event.span) == pytest.approx(1.0)

    def test_filler_varies_across_runs(self, noisy_sim):
        utterances = run_reconstruction(noisy_sim)
        spurious_starts = {s.start_s for s in noisy_sim.spurious_spans}
        spurious = [u for u in utterances if u.span.start_s in spurious_starts]
        assert spurious, "fixture should contain spurious utterances"
        for utterance in spurious:
            assert utterance.asr_runs[0] != utterance.asr_runs[1]
            assert all(run in FILLER_TEXTS for run in utterance.asr_runs)

    def test_scripted_text_stable_across_runs(self, noisy_sim):
        utterances = run_reconstruction(noisy_sim)
        scripted_starts = {e.time_s for e in noisy_sim.scenario.events}
        for utterance in utterances:
            if utterance.span.start_s in scripted_starts:
                assert utterance.asr_runs[0] == utterance.asr_runs[1]

    def test_noise_embeddings_orthogonal_to_centres(self, noisy_sim):
        embedder = noisy_sim.embedder
        trainer, trainee = build_profiles(noisy_sim)
        for span in noisy_sim.spurious_spans:
            noise = embedder.embed(noisy_sim.audio, span)
            for anchor in trainer.anchors + trainee.anchors:
                assert abs(cosine_similarity(noise, anchor.embedding)) < 0.2

    def test_cross_role_leakage_raises_cross_similarity(self):
        clean = make_scenario(seed=21, n_events=40)
        hard = make_scenario(seed=21, n_events=40, cross_role_leakage=0.5)
        for scenario, bound in ((clean, 0.05), (hard, 0.3)):
            sim = simulate_surgery(scenario)
            event = scenario.events[0]
            embedding = sim.embedder.embed(sim.audio, event.span)
            other = [e for e in scenario.events if e.role != event.role][0]
            other_embedding = sim.embedder.embed(sim.audio, other.span)
            cross = cosine_similarity(embedding, other_embedding)
            if scenario is hard:
                assert cross > bound
            else:
                assert abs(cross) < bound


class TestEndToEndIdentity:
    def test_zero_noise_pipeline_reproduces_script(self, clean_sim):
        utterances = run_reconstruction(clean_sim)
        trainer, trainee = build_profiles(clean_sim)
        refined = refine_utterances(
            list(utterances), clean_sim.audio, trainer, trainee, clean_sim.embedder
        )
        assert refined.removed == ()
        dialogue = assemble_dialogue(list(refined.kept))
        events = clean_sim.scenario.events
        assert [t.text for t in dialogue] == [e.text for e in events]
        assert [t.role for t in dialogue] == [e.role for e in events]


class TestScriptedClassifier:
    def test_detect_echoes_labels(self, clean_sim):
        utterances = run_reconstruction(clean_sim)
        trainer, trainee = build_profiles(clean_sim)
        refined = refine_utterances(
            list(utterances), clean_sim.audio, trainer, trainee, clean_sim.embedder
        )
        dialogue = assemble_dialogue(list(refined.kept))
        truth = {e.text: e.is_feedback for e in clean_sim.scenario.events}
        from ordialogue.tasks import classify_feedback

        for turn in dialogue[:10]:
            prediction = classify_feedback(dialogue, turn.index, clean_sim.classifier)
            assert prediction.is_feedback == truth[turn.text]

    def test_unknown_phrase_reads_as_feedback(self, clean_sim):
        from ordialogue.dialogue import DialogueTurn
        from ordialogue.dialogue import ContextWindow
        from ordialogue.timeline import seconds_to_clock

        ghost = DialogueTurn(
            index=0,
            role="unknown",
            span=TimeSpan(1.0, 2.0),
            text="Thank you.",
            timestamp_label=seconds_to_clock(1.0),
        )
        payload = build_prompt(
            PromptTask.DETECT,
            render_turn_line(ghost),
            context=ContextWindow(turns=(), target=ghost),
        )
        assert clean_sim.classifier.complete(payload) == "{'feedback': 'yes'}"

    def test_alignment_uses_token_overlap(self, clean_sim):
        payload = build_prompt(
            PromptTask.ALIGN, "buzz the bladder neck", annotation="bladder visible"
        )
        assert clean_sim.classifier.complete(payload) == "{'alignment': 'yes'}"
        payload = build_prompt(PromptTask.ALIGN, "one two", annotation="three four")
        assert clean_sim.classifier.complete(payload) == "{'alignment': 'no'}"


class TestScenarioAudio:
    def test_slicing_is_window_arithmetic(self, clean_scenario):
        audio = ScenarioAudio(clean_scenario)
        part = audio.slice(180.0, 360.0)
        assert part.start_s == 180.0 and part.end_s == 360.0
        nested = part.slice(10.0, 20.0)
        assert nested.start_s == 190.0 and nested.end_s == 200.0

    def test_duration(self, clean_scenario):
        assert ScenarioAudio(clean_scenario).duration_s == clean_scenario.duration_s


class TestAnchorSpecs:
    def test_five_per_role(self, clean_scenario):
        specs = anchor_specs_for_scenario(clean_scenario)
        assert sum(1 for s in specs if s.role == "trainer") == 5
        assert sum(1 for s in specs if s.role == "trainee") == 5

    def test_insufficient_events_rejected(self):
        scenario = make_scenario(seed=1, n_events=4)
        with pytest.raises(ValueError, match="need 5"):
            anchor_specs_for_scenario(scenario)


def test_ground_truth_annotations_match_feedback_events(clean_sim):
    feedback_events = [e for e in clean_sim.scenario.events if e.is_feedback]
    assert len(clean_sim.annotations) == len(feedback_events)
    for annotation, event in zip(clean_sim.annotations, feedback_events):
        assert annotation.time_s == event.time_s
        assert annotation.transcript == event.text
        assert annotation.technical == event.technical
