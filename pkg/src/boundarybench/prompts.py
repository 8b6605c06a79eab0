"""Question construction and interleaved prompt-text assembly.

The question is drawn once per bundle and repeated verbatim across every
example; the prompt text interleaves one ``<image>`` placeholder per example
with the question and the demonstration answers. Layout is byte-stable:
LF line endings, a blank line between blocks, and a trailing space after the
final "Answer:" so the model continues in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TEXT_MODES, ConfigError

DEFAULT_TEMPLATES = (
    "Is the {fiducial} {description}?",
    "Are the {fiducial} {description}?",
    "Are the {fiducial} {description}?",
    "Can you see if the {fiducial} is {description}?",
    "Is there a problem with the {fiducial}?",
    "Look at the {fiducial}. Is it {description}?",
    "Find the {fiducial}. Is it {description}?",
    "Can you see the {fiducial}? Is it {description}?",
    "Is the {fiducial} properly positioned?",
    "Is the {fiducial} correctly aligned?",
    "Is the {fiducial} in the correct position?",
    "Can you see if the {fiducial} is in the correct position?",
    "Is the {fiducial} in the right place?",
    "Find the {fiducial}. Is it in the right place?",
    "Can you see the {fiducial}? Is it in the right place?",
    "Is the {fiducial} in the right position?",
)

DEFAULT_FIDUCIAL_SYNONYMS = (
    "fiducial",
    "marker",
    "landmark",
    "beacon",
    "indicator",
    "reference mark",
)

DEFAULT_DESCRIPTIONS = (
    "aligned",
    "in position",
    "in the right place",
    "out of place",
    "properly placed",
)

PROMPT_HEADER = "Please answer the following question based on the provided examples."


@dataclass(frozen=True)
class QuestionTemplateSet:
    """The sampling vocabulary for questions; defaults match the benchmark."""

    templates: tuple[str, ...] = DEFAULT_TEMPLATES
    fiducial_synonyms: tuple[str, ...] = DEFAULT_FIDUCIAL_SYNONYMS
    descriptions: tuple[str, ...] = DEFAULT_DESCRIPTIONS

    def __post_init__(self) -> None:
        if not self.templates:
            raise ConfigError("template list must be non-empty")
        if not self.fiducial_synonyms:
            raise ConfigError("fiducial synonym list must be non-empty")
        if not self.descriptions:
            raise ConfigError("description list must be non-empty")
        for t in self.templates:
            if "{fiducial}" not in t:
                raise ConfigError(f"template {t!r} is missing the {{fiducial}} slot")

    @classmethod
    def from_mapping(cls, raw: dict) -> "QuestionTemplateSet":
        """Build from a config-file mapping; unknown keys are rejected."""
        known = {"templates", "fiducial_synonyms", "descriptions"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown template-set keys: {sorted(extra)}")
        kwargs = {k: tuple(v) for k, v in raw.items()}
        return cls(**kwargs)


def build_question(
    text_mode: str,
    target_class: str,
    rng: np.random.Generator,
    templates: QuestionTemplateSet = QuestionTemplateSet(),
) -> str:
    """Draw one question string for a bundle.

    Mode "none" substitutes a fiducial synonym, so the text carries no hint
    about which object matters; mode "guide" substitutes the target
    category name verbatim. The description slot, when present, is filled
    uniformly; phrasing never affects ground-truth labels.
    """
    if text_mode not in TEXT_MODES:
        raise ConfigError(f"unknown text mode {text_mode!r}")
    if text_mode == "guide" and not target_class:
        raise ValueError("guide mode needs a non-empty target class name")
    template = templates.templates[int(rng.integers(len(templates.templates)))]
    if text_mode == "none":
        subject = templates.fiducial_synonyms[
            int(rng.integers(len(templates.fiducial_synonyms)))]
    else:
        subject = target_class
    question = template.replace("{fiducial}", subject)
    if "{description}" in question:
        phrase = templates.descriptions[int(rng.integers(len(templates.descriptions)))]
        question = question.replace("{description}", phrase)
    return question


def label_to_answer(label: int) -> str:
    if label == 1:
        return "Yes"
    if label == 0:
        return "No"
    raise ValueError(f"label must be 0 or 1, got {label!r}")


def answer_to_label(answer: str) -> int | None:
    """Case-tolerant inverse of label_to_answer; None when unrecognized."""
    folded = answer.strip().lower()
    if folded == "yes":
        return 1
    if folded == "no":
        return 0
    return None


def build_prompt_text(question: str, n_examples: int, demo_labels: list[int] | tuple[int, ...]) -> str:
    """Assemble the full interleaved prompt.

    Blocks: header, then "Example k" blocks with the demo answers, then the
    "Query" block ending in "Answer: " (trailing space, no final newline).
    """
    if len(demo_labels) != n_examples - 1:
        raise ValueError(
            f"need {n_examples - 1} demo labels for {n_examples} examples, "
            f"got {len(demo_labels)}")
    parts = [PROMPT_HEADER, ""]
    for k, label in enumerate(demo_labels, start=1):
        parts.append(f"Example {k}:")
        parts.append("<image>")
        parts.append(f"Question: {question}")
        parts.append(f"Answer: {label_to_answer(label)}")
        parts.append("")
    parts.append("Query:")
    parts.append("<image>")
    parts.append(f"Question: {question}")
    parts.append("Answer: ")
    return "\n".join(parts)


def parse_prompt_text(text: str) -> tuple[str, list[int]]:
    """Recover (question, demo_labels) from prompt text; raises ValueError
    when the layout does not match build_prompt_text."""
    lines = text.split("\n")
    if not lines or lines[0] != PROMPT_HEADER:
        raise ValueError("prompt text does not start with the expected header")
    question: str | None = None
    labels: list[int] = []
    i = 1
    while i < len(lines):
        if lines[i] != "":
            raise ValueError(f"expected blank separator at line {i + 1}")
        i += 1
        block = lines[i:i + 4]
        if len(block) < 4:
            raise ValueError("truncated example block")
        head, img, q_line, a_line = block
        is_query = head == "Query:"
        if not is_query and not (head.startswith("Example ") and head.endswith(":")):
            raise ValueError(f"unexpected block header {head!r}")
        if img != "<image>":
            raise ValueError(f"expected '<image>' line, got {img!r}")
        if not q_line.startswith("Question: "):
            raise ValueError(f"malformed question line {q_line!r}")
        q = q_line[len("Question: "):]
        if question is None:
            question = q
        elif q != question:
            raise ValueError("question differs between blocks")
        if is_query:
            if a_line != "Answer: " or i + 4 != len(lines):
                raise ValueError("query block must end the prompt with 'Answer: '")
            return question, labels
        label = answer_to_label(a_line[len("Answer: "):]) if a_line.startswith("Answer: ") else None
        if label is None:
            raise ValueError(f"malformed answer line {a_line!r}")
        labels.append(label)
        i += 4
    raise ValueError("prompt text has no query block")
