from pathlib import Path

import pytest

from ordialogue.dialogue import ContextWindow, DialogueTurn
from ordialogue.prompts import (
    TASK_KEYS,
    PromptTask,
    build_prompt,
    format_yes_no_map,
    render_context,
    render_turn_line,
)
from ordialogue.timeline import TimeSpan, seconds_to_clock

GOLDEN_DIR = Path(__file__).parent / "goldens"
SEP = "\n\n===== USER =====\n\n"


def turn(i, start, role, text):
    return DialogueTurn(
        index=i,
        role=role,
        span=TimeSpan(start, start + 3.0),
        text=text,
        timestamp_label=seconds_to_clock(start),
    )


@pytest.fixture
def fixed_inputs():
    t0 = turn(0, 725.0, "trainer", "Open up the lateral side before you go deeper.")
    t1 = turn(1, 738.0, "trainee", "Okay, I see it now.")
    target = turn(2, 750.0, "trainer", "Buzz it right there.")
    return {
        "context": ContextWindow(turns=(t0, t1), target=target),
        "phrase": render_turn_line(target),
        "s1": "just buzz that right there when you can see it",
        "s2": "buzz it right there before the bleeder",
        "human": "tighten the suture before the next throw",
    }


def render(task, fx):
    if task is PromptTask.ALIGN:
        return build_prompt(task, fx["s1"], annotation=fx["s2"])
    if task in (PromptTask.EFFECTIVENESS_HUMAN, PromptTask.COMPONENTS_HUMAN):
        return build_prompt(task, fx["human"])
    return build_prompt(task, fx["phrase"], context=fx["context"])


@pytest.mark.parametrize("task", list(PromptTask))
def test_golden_files(task, fixed_inputs):
    payload = render(task, fixed_inputs)
    golden = (GOLDEN_DIR / f"{task.value}.txt").read_text(encoding="utf-8")
    assert payload.system_text + SEP + payload.user_text == golden


@pytest.mark.parametrize("task", list(PromptTask))
def test_rendering_is_byte_stable(task, fixed_inputs):
    first = render(task, fixed_inputs)
    second = render(task, fixed_inputs)
    assert first == second


class TestBuildPrompt:
    def test_detect_with_empty_context(self):
        target = turn(0, 10.0, "trainer", "Buzz it.")
        window = ContextWindow(turns=(), target=target)
        payload = build_prompt(PromptTask.DETECT, render_turn_line(target), context=window)
        assert 'Phrase:\n\n00:00:10 Trainer: "Buzz it."' in payload.user_text

    def test_align_contains_both_strings(self, fixed_inputs):
        payload = build_prompt(PromptTask.ALIGN, "first string", annotation="second string")
        assert "String 1:\n\nfirst string" in payload.user_text
        assert "String 2:\n\nsecond string" in payload.user_text

    def test_human_variant_has_no_context_section(self, fixed_inputs):
        payload = build_prompt(PromptTask.EFFECTIVENESS_HUMAN, fixed_inputs["human"])
        assert "Feedback:\n" + fixed_inputs["human"] in payload.user_text
        assert "Context:" not in payload.user_text

    def test_missing_context_rejected(self):
        with pytest.raises(ValueError, match="requires a context"):
            build_prompt(PromptTask.DETECT, "phrase")

    def test_context_rejected_for_human_variant(self, fixed_inputs):
        with pytest.raises(ValueError, match="takes no context"):
            build_prompt(
                PromptTask.COMPONENTS_HUMAN, "t", context=fixed_inputs["context"]
            )

    def test_align_requires_second_string(self):
        with pytest.raises(ValueError, match="both strings"):
            build_prompt(PromptTask.ALIGN, "only one")


class TestContextRendering:
    def test_line_format(self):
        line = render_turn_line(turn(0, 2384.0, "trainer", "So open up wide."))
        assert line == '00:39:44 Trainer: "So open up wide."'

    def test_context_lines_carry_trailing_commas(self):
        t0 = turn(0, 10.0, "trainer", "one")
        t1 = turn(1, 20.0, "unknown", "two")
        window = ContextWindow(turns=(t0, t1), target=turn(2, 30.0, "trainee", "x"))
        assert render_context(window) == '00:00:10 Trainer: "one",\n00:00:20 Unknown: "two",'


class TestFormatYesNoMap:
    def test_detect_shape(self):
        assert format_yes_no_map(PromptTask.DETECT, {"feedback": True}) == "{'feedback': 'yes'}"

    def test_effectiveness_shape(self):
        text = format_yes_no_map(
            PromptTask.EFFECTIVENESS_DIALOGUE,
            {"verbal acknowledgement": True, "behavioral change": False},
        )
        assert text == "{\n    'verbal acknowledgement': 'yes',\n    'behavioral change': 'no'\n}"

    def test_components_shape_has_trailing_comma(self):
        text = format_yes_no_map(
            PromptTask.COMPONENTS_DIALOGUE,
            {"anatomic": True, "procedural": False, "technical": True},
        )
        assert text == "{\n'anatomic': 'yes',\n'procedural': 'no',\n'technical': 'yes',\n}"

    def test_missing_key_rejected(self):
        with pytest.raises(ValueError, match="missing keys"):
            format_yes_no_map(PromptTask.COMPONENTS_DIALOGUE, {"anatomic": True})


def test_task_keys_cover_all_tasks():
    assert set(TASK_KEYS) == set(PromptTask)
