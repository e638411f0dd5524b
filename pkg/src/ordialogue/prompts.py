"""Prompt templates for the clinical text-classification tasks.

The template strings are the operational contract with the hosted classifier
and are golden-file tested; do not reflow or "fix" their wording, spacing, or
the response-format examples (including the stray list count in the detection
prompt and the trailing comma in the component example). Placeholders use
[[TOKEN]] sentinels because the templates contain literal braces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dialogue import ContextWindow, DialogueTurn


class PromptTask(str, Enum):
    DETECT = "detect"
    ALIGN = "align"
    EFFECTIVENESS_DIALOGUE = "effectiveness_dialogue"
    EFFECTIVENESS_HUMAN = "effectiveness_human"
    COMPONENTS_DIALOGUE = "components_dialogue"
    COMPONENTS_HUMAN = "components_human"


TASK_KEYS: dict[PromptTask, tuple[str, ...]] = {
    PromptTask.DETECT: ("feedback",),
    PromptTask.ALIGN: ("alignment",),
    PromptTask.EFFECTIVENESS_DIALOGUE: ("verbal acknowledgement", "behavioral change"),
    PromptTask.EFFECTIVENESS_HUMAN: ("verbal acknowledgement", "behavioral change"),
    PromptTask.COMPONENTS_DIALOGUE: ("anatomic", "procedural", "technical"),
    PromptTask.COMPONENTS_HUMAN: ("anatomic", "procedural", "technical"),
}

_DIALOGUE_TASKS = {
    PromptTask.DETECT,
    PromptTask.EFFECTIVENESS_DIALOGUE,
    PromptTask.COMPONENTS_DIALOGUE,
}


@dataclass(frozen=True)
class PromptPayload:
    system_text: str
    user_text: str
    task: PromptTask


DETECT_SYSTEM = """You are a binary classifier that determines whether a given phrase contains delivery of feedback from a trainer to a trainee where the trainee is conducting urology surgery using the da Vinci robot. The dialogue is between two speakers, a trainer and a trainee. There are multiple turns in the dialogue where the same speaker can go back to back because a piece of dialogue from the other speaker might not have been picked up or because the other speaker didn't speak as much (usually the trainer speaks more than the trainee). There can be 6 types of feedback:

1. Anatomic: familiarity with anatomic structures and landmarks. i.e. 'Stay in the correct plane, between the 2 fascial layers.'

2. Procedure: pertains to timing and sequence of surgical steps. i.e. 'You can switch to the left side now.'

3. Technical: performance of a discrete task with appropriate knowledge of factors including exposure, instruments, and traction. i.e. 'Buzz it.'

4. Praise: a positive remark. i.e. 'Good job.'

5. Criticism: a negative remark. i.e. 'It should never be like this.'"""

DETECT_USER = """Classify whether the following phrase contains the delivery of feedback considering the given context of the last couple turns in the dialogue where the phrase is the last entry in the context.

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

{'feedback': 'yes'} if the dialogue contains feedback

{'feedback': 'no'} if the dialogue does not contain feedback

Context:

[[CONTEXT]]

Phrase:

[[PHRASE]]

For example:

{'feedback': 'yes'}"""

ALIGN_SYSTEM = """You are a binary classifier that determines whether two strings have any alignment or not. An alignment means that the two strings might have some common words or phrases that align with each other in terms of their order and/or meaning."""

ALIGN_USER = """Classify whether the following two strings have any alignment or not.

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

{'alignment': 'yes'} if the two strings have any alignment

{'alignment': 'no'} if the two strings do not have any alignment

For example:
{
    'alignment': 'yes'
}

String 1:

[[STRING1]]

String 2:

[[STRING2]]"""

EFFECTIVENESS_DIALOGUE_SYSTEM = """You are an AI assistant specializing in predicting trainee responses during urology surgery training using the da Vinci robot. Your task is to analyze dialogue between a trainer and a trainee, focusing on the trainee's reactions to feedback. The dialogue may contain multiple consecutive turns by the same speaker due to missed responses or varying speech patterns.

You will categorize potential trainee responses into two types:

1. Verbal Acknowledgement: This includes any verbal or audible confirmation from the trainee indicating they have heard and understood the feedback. Examples include:
   - "Okay, I see"
   - "Uh-huh, got it"
   - "Understood"
   - "Yes, I'll do that"

2. Behavioral Change: This refers to any physical or observable adjustment made by the trainee that directly corresponds to the feedback received. For example:
   - If the trainer suggests tightening a suture, the trainee immediately pulls the suture thread more tightly.

Your role is to predict which type(s) of response the trainee is likely to give based on the specific feedback provided by the trainer. Consider the context of the surgical procedure and the nature of the feedback when making your predictions."""

EFFECTIVENESS_DIALOGUE_USER = """Classify whether the following feedback phrase will lead to a trainee response, where a trainee response can be either 1) verbal acknowledgement, 2) behavioral change.

Context:
[[CONTEXT]]

Phrase:
[[PHRASE]]

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

'verbal acknowledgement': 'yes' if you predict the trainee to respond with a verbal acknowledgement otherwise 'no'

'behavioral change': 'yes' if you predict the trainee to respond with a behavioral change otherwise 'no'

Your output can be a combination of the two categories. For example:

{
    'verbal acknowledgement': 'yes',
    'behavioral change': 'no'
}"""

EFFECTIVENESS_HUMAN_SYSTEM = """You are an AI assistant specializing in predicting trainee responses during urology surgery training using the da Vinci robot. Your task is to analyze feedback from a trainer surgeon to a trainee surgeon, focusing on the trainee's reactions to feedback.

You will categorize potential trainee responses into two types:

1. Verbal Acknowledgement: This includes any verbal or audible confirmation from the trainee indicating they have heard and understood the feedback. Examples include:
   - "Okay, I see"
   - "Uh-huh, got it"
   - "Understood"
   - "Yes, I'll do that"

2. Behavioral Change: This refers to any physical or observable adjustment made by the trainee that directly corresponds to the feedback received. For example:
   - If the trainer suggests tightening a suture, the trainee immediately pulls the suture thread more tightly.

Your role is to predict which type(s) of response the trainee is likely to give based on the specific feedback provided by the trainer. Consider the context of the surgical procedure and the nature of the feedback when making your predictions."""

EFFECTIVENESS_HUMAN_USER = """Classify whether the following feedback phrase will lead to a trainee response, where a trainee response can be either 1) verbal acknowledgement, 2) behavioral change.

Feedback:
[[FEEDBACK]]

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

'verbal acknowledgement': 'yes' if you predict the trainee to respond with a verbal acknowledgement, otherwise 'no'

'behavioral change': 'yes' if you predict the trainee to respond with a behavioral change otherwise 'no'

Your output can be a combination of the two categories. For example:

{
    'verbal acknowledgement': 'yes',
    'behavioral change': 'no'
}"""

COMPONENTS_DIALOGUE_SYSTEM = """You are an AI assistant specializing in classifying feedback during urology surgery training using the da Vinci robot. Your task is to analyze dialogue between a trainer and a trainee, focusing on categorizing the feedback into anatomic, procedural, and/or technical. The dialogue may contain multiple consecutive turns by the same speaker due to missed responses or varying speech patterns.

You will categorize the feedback into three types:

1. Anatomic: Familiarity with anatomic structures and landmarks. Examples include:
 - "Stay in the correct plane, between the 2 fascial layers."
 - "Avoid the blood vessels here."

2. Procedural: Pertains to the timing and sequence of surgical steps. Examples include:
 - "You need to suture this area first."
 - "You can switch to the left side now."

3. Technical: Performance of a discrete task with appropriate knowledge of factors including exposure, instruments, and traction. Examples include:
 - "Adjust the tension on the suture."
 - "Buzz it."

Your role is to predict which type(s) of feedback the phrase contains based on the specific feedback provided by the trainer. Consider the context of the surgical procedure and the nature of the feedback when making your predictions."""

COMPONENTS_DIALOGUE_USER = """Classify the feedback phrase into one or more of the following categories: 1) anatomic, 2) procedural, 3) technical. Do this while considering the given context of the last couple turns in the dialogue where the phrase is the last entry in the context.

Context:
[[CONTEXT]]

Phrase:
[[PHRASE]]

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

'anatomic': 'yes' if the feedback is anatomic otherwise 'no'

'procedural': 'yes' if the feedback is procedural otherwise 'no'

'technical': 'yes' if the feedback is technical otherwise 'no'

Your output can be a combination of the three categories. For example:

{
'anatomic': 'yes',
'procedural': 'no',
'technical': 'yes',
}"""

COMPONENTS_HUMAN_SYSTEM = """You are an AI assistant specializing in classifying feedback during urology surgery training using the da Vinci robot. Your task is to analyze feedback from a trainer to a trainee, focusing on categorizing the feedback into anatomic, procedural, and/or technical.

You will categorize the feedback into three types:

1. Anatomic: Familiarity with anatomic structures and landmarks. Examples include:
 - "Stay in the correct plane, between the 2 fascial layers."
 - "Avoid the blood vessels here."

2. Procedural: Pertains to the timing and sequence of surgical steps. Examples include:
 - "You need to suture this area first."
 - "You can switch to the left side now."

3. Technical: Performance of a discrete task with appropriate knowledge of factors including exposure, instruments, and traction. Examples include:
 - "Adjust the tension on the suture."
 - "Buzz it."

Your role is to predict which type(s) of feedback the phrase contains based on the specific feedback provided by the trainer. Consider the context of the surgical procedure and the nature of the feedback when making your predictions."""

COMPONENTS_HUMAN_USER = """Classify the feedback phrase into one or more of the following categories: 1) anatomic, 2) procedural, 3) technical. Do this while considering the given context of the last couple of turns in the dialogue where the phrase is the last entry in the context.

Feedback:
[[FEEDBACK]]

Format your response as follows. DO NOT DO ANY OTHER FORMATTING.:

'anatomic': 'yes' if the feedback is anatomic otherwise 'no'

'procedural': 'yes' if the feedback is procedural otherwise 'no'

'technical': 'yes' if the feedback is technical otherwise 'no'

Your output can be a combination of the three categories. For example:

{
'anatomic': 'yes',
'procedural': 'no',
'technical': 'yes',
}"""

_TEMPLATES: dict[PromptTask, tuple[str, str]] = {
    PromptTask.DETECT: (DETECT_SYSTEM, DETECT_USER),
    PromptTask.ALIGN: (ALIGN_SYSTEM, ALIGN_USER),
    PromptTask.EFFECTIVENESS_DIALOGUE: (
        EFFECTIVENESS_DIALOGUE_SYSTEM,
        EFFECTIVENESS_DIALOGUE_USER,
    ),
    PromptTask.EFFECTIVENESS_HUMAN: (EFFECTIVENESS_HUMAN_SYSTEM, EFFECTIVENESS_HUMAN_USER),
    PromptTask.COMPONENTS_DIALOGUE: (COMPONENTS_DIALOGUE_SYSTEM, COMPONENTS_DIALOGUE_USER),
    PromptTask.COMPONENTS_HUMAN: (COMPONENTS_HUMAN_SYSTEM, COMPONENTS_HUMAN_USER),
}

_ROLE_LABELS = {"trainer": "Trainer", "trainee": "Trainee", "unknown": "Unknown"}


def render_turn_line(turn: DialogueTurn, *, trailing_comma: bool = False) -> str:
    """One dialogue line in the transcript style: HH:MM:SS Role: "text"."""
    role = _ROLE_LABELS.get(turn.role, turn.role.capitalize())
    line = f'{turn.timestamp_label} {role}: "{turn.text}"'
    return line + "," if trailing_comma else line


def render_context(window: ContextWindow) -> str:
    return "\n".join(render_turn_line(t, trailing_comma=True) for t in window.turns)


def build_prompt(
    task: PromptTask,
    phrase: str,
    *,
    context: ContextWindow | str | None = None,
    annotation: str | None = None,
) -> PromptPayload:
    """Render the task's template with the given pieces substituted.

    Dialogue variants require a context (possibly empty); human-annotation
    variants must not be given one. The alignment task pairs `phrase` with
    `annotation` as its two strings.
    """
    system_text, user_template = _TEMPLATES[task]
    if task in _DIALOGUE_TASKS:
        if context is None:
            raise ValueError(f"task {task.value} requires a context")
        context_text = render_context(context) if isinstance(context, ContextWindow) else context
        user_text = user_template.replace("[[CONTEXT]]", context_text).replace(
            "[[PHRASE]]", phrase
        )
    elif task is PromptTask.ALIGN:
        if annotation is None:
            raise ValueError("alignment task requires both strings")
        user_text = user_template.replace("[[STRING1]]", phrase).replace(
            "[[STRING2]]", annotation
        )
    else:
        if context is not None:
            raise ValueError(f"task {task.value} takes no context")
        user_text = user_template.replace("[[FEEDBACK]]", phrase)
    return PromptPayload(system_text=system_text, user_text=user_text, task=task)


def format_yes_no_map(task: PromptTask, values: dict[str, bool]) -> str:
    """Canonical response text in the shape the task's template demonstrates."""
    keys = TASK_KEYS[task]
    missing = [k for k in keys if k not in values]
    if missing:
        raise ValueError(f"missing keys for {task.value}: {missing}")
    rendered = {k: "yes" if values[k] else "no" for k in keys}
    if len(keys) == 1:
        key = keys[0]
        return f"{{'{key}': '{rendered[key]}'}}"
    if task in (PromptTask.COMPONENTS_DIALOGUE, PromptTask.COMPONENTS_HUMAN):
        body = "\n".join(f"'{k}': '{rendered[k]}'," for k in keys)
        return "{\n" + body + "\n}"
    body = ",\n".join(f"    '{k}': '{rendered[k]}'" for k in keys)
    return "{\n" + body + "\n}"
