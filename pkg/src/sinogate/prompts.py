"""Tutor system-prompt rendering and the EBCL task registry.

The English prose is stored once; only the level token and the character-list
block vary. The without-list variant is produced by deleting exactly the list
paragraph and nothing else, so it deliberately keeps the phrase "provided in
the list" — fidelity to the source templates beats cleanliness.

The source only prints the without-list template for A1; for A1+ and A2 the
same deletion rule is applied and the result is marked ``derived``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Literal

from .charset import ThresholdLevel, load_builtin
from .errors import SinogateError

PromptCondition = Literal["with_list", "without_list"]

TASK_CODES: tuple[str, ...] = (
    "RW1", "RW2", "RW3", "RW4", "RW5", "PW1", "PW2", "IW1", "IW2", "IW3",
)


class UnknownTask(SinogateError):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"unknown EBCL task code: {code!r}")


@dataclass(frozen=True)
class TaskCode:
    code: str
    title: str
    descriptors: dict[str, list[str]]  # level tag -> descriptor paragraphs


def list_tasks() -> list[TaskCode]:
    """The ten EBCL items in menu order, with A1 and A2 descriptors."""
    raw = json.loads(resources.files("sinogate.data").joinpath("tasks.json").read_text("utf-8"))
    return [TaskCode(code=t["code"], title=t["title"], descriptors=t["descriptors"])
            for t in raw]


def get_task(code: str) -> TaskCode:
    for task in list_tasks():
        if task.code == code:
            return task
    raise UnknownTask(code)


def task_user_message(code: str) -> str:
    """The simulated student's single user turn: the bare task code."""
    if code not in TASK_CODES:
        raise UnknownTask(code)
    return code


# Per-level wording of the list/constraint sentences ("A1-level characters",
# "A1+ level characters", "A2-level characters").
_LEVEL_LABEL = {
    ThresholdLevel.A1: "A1-level",
    ThresholdLevel.A1PLUS: "A1+ level",
    ThresholdLevel.A2: "A2-level",
}

# The printed A1 list ends with a full stop; the A1+ and A2 lists do not.
_LIST_TERMINATOR = {
    ThresholdLevel.A1: ".",
    ThresholdLevel.A1PLUS: "",
    ThresholdLevel.A2: "",
}

_HEADER = """\
Role Instructions: You will act as my Chinese tutor. First, introduce yourself and offer me a choice between three learning objectives.

You will ask the initial question in English, not Chinese:

- Revise a grammar point
- Have a conversation
- Understand and review a text

Alternatively, you may also offer an activity from the EBCL framework:

- RW1: Overall Reading Comprehension
- RW2: Reading Correspondence
- RW3: Reading for Orientation
- RW4: Reading for Information & Argument
- RW5: Reading Instructions
- PW1: Overall Written Production
- PW2: Creative Writing
- IW1: Overall Written Interaction
- IW2: Correspondence
- IW3: Notes, Messages & Forms
"""

_COT_TAIL = (
    "First answer to my request. When using Chinese words only use words that "
    "are made up exclusively of the {label} characters provided in the list. "
    "Second check if the characters you used are not present in the list of "
    "{label} character. Third rephrase your responses to stay within the "
    "constraint of using {label} characters."
)


@dataclass(frozen=True)
class SystemPrompt:
    level: ThresholdLevel
    condition: PromptCondition
    text: str
    derived: bool  # True when the source never prints this variant


def build_system_prompt(level: ThresholdLevel,
                        condition: PromptCondition) -> SystemPrompt:
    """Render the tutor system prompt for a (level, condition) pair."""
    if condition not in ("with_list", "without_list"):
        raise ValueError(f"unknown condition: {condition!r}")
    label = _LEVEL_LABEL[level]
    parts = [_HEADER]
    if condition == "with_list":
        chars = load_builtin(level).render()
        parts.append(f"\n{label} character list is: {chars}{_LIST_TERMINATOR[level]}\n")
    parts.append("\n" + _COT_TAIL.format(label=label) + "\n")
    derived = condition == "without_list" and level is not ThresholdLevel.A1
    return SystemPrompt(level=level, condition=condition,
                        text="".join(parts), derived=derived)


def tasks_to_json() -> str:
    return json.dumps(
        [{"code": t.code, "title": t.title, "descriptors": t.descriptors}
         for t in list_tasks()],
        ensure_ascii=False, indent=2,
    )
