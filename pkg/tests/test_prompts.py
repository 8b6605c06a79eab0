"""Prompt assembly: templates, question synthesis, exact text layout."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boundarybench import (
    ConfigError,
    QuestionTemplateSet,
    build_prompt_text,
    build_question,
)
from boundarybench.prompts import (
    DEFAULT_DESCRIPTIONS,
    DEFAULT_FIDUCIAL_SYNONYMS,
    DEFAULT_TEMPLATES,
    PROMPT_HEADER,
    answer_to_label,
    label_to_answer,
    parse_prompt_text,
)

GOLDEN = Path(__file__).parent / "data" / "golden_prompt.txt"


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def test_template_inventory():
    assert len(DEFAULT_TEMPLATES) == 16
    assert len(DEFAULT_FIDUCIAL_SYNONYMS) == 6
    assert len(DEFAULT_DESCRIPTIONS) == 5
    # the duplicated phrasing is intentional and doubles its draw weight
    assert DEFAULT_TEMPLATES.count("Are the {fiducial} {description}?") == 2
    for template in DEFAULT_TEMPLATES:
        assert "{fiducial}" in template


def test_guide_mode_uses_category_verbatim():
    for seed in range(40):
        q = build_question("guide", "Heat Guns", rng(seed))
        assert "Heat Guns" in q
        for synonym in DEFAULT_FIDUCIAL_SYNONYMS:
            assert synonym not in q.lower().replace("heat guns", "")


def test_none_mode_never_leaks_the_category():
    seen = set()
    for seed in range(200):
        q = build_question("none", "Heat Guns", rng(seed))
        assert "Heat Guns" not in q
        assert any(s in q for s in DEFAULT_FIDUCIAL_SYNONYMS)
        seen.add(q)
    assert len(seen) > 16     # templates x synonyms actually vary


def test_all_templates_reachable():
    # sentinel description so stems map back onto templates unambiguously
    probe = QuestionTemplateSet(templates=DEFAULT_TEMPLATES,
                                fiducial_synonyms=("marker",),
                                descriptions=("DESCWORD",))
    stems = set()
    for seed in range(600):
        q = build_question("guide", "bolt", rng(seed), probe)
        stems.add(q.replace("bolt", "{fiducial}")
                   .replace("DESCWORD", "{description}"))
    assert stems == set(DEFAULT_TEMPLATES)


def test_custom_template_set_validation():
    with pytest.raises(ConfigError):
        QuestionTemplateSet(templates=())
    with pytest.raises(ConfigError):
        QuestionTemplateSet(templates=("Is it okay?",))   # no {fiducial}
    custom = QuestionTemplateSet(
        templates=("Is the {fiducial} fine?",),
        fiducial_synonyms=("widget",),
        descriptions=("fine",))
    assert build_question("none", "bolt", rng(), custom) == "Is the widget fine?"


def test_from_mapping_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        QuestionTemplateSet.from_mapping({"templates": ["Is {fiducial}?"],
                                          "color": "red"})


def test_answer_words():
    assert label_to_answer(1) == "Yes"
    assert label_to_answer(0) == "No"
    assert answer_to_label("yes") == 1
    assert answer_to_label("NO") == 0
    assert answer_to_label("maybe") is None


def test_prompt_layout_golden_bytes():
    from boundarybench import SamplerConfig, TaskFamilyParams, generate_bundle
    fam = TaskFamilyParams("i5", "hard", 3, "guide")
    bundle = generate_bundle(fam, SamplerConfig(), master_seed=0,
                             bundle_index=6996)
    assert bundle.prompt_text.encode("utf-8") == GOLDEN.read_bytes()
    assert bundle.question == "Is the Heat Guns in the right position?"
    assert [d.label for d in bundle.demos] == [1, 0, 0, 1]
    assert bundle.query.label == 0


def test_prompt_layout_shape():
    text = build_prompt_text("Is the marker aligned?", 5, [1, 0, 0, 1])
    lines = text.split("\n")
    assert lines[0] == PROMPT_HEADER
    assert lines[1] == ""
    assert text.count("<image>") == 5
    assert text.endswith("Answer: ")
    assert not text.endswith("\n")
    assert "Example 4:" in text and "Example 5:" not in text
    assert "Query:" in text
    assert "\r" not in text


@given(labels=st.permutations([0, 0, 1, 1]))
def test_prompt_round_trip(labels):
    question = "Is the beacon in position?"
    text = build_prompt_text(question, 5, list(labels))
    parsed_question, parsed_labels = parse_prompt_text(text)
    assert parsed_question == question
    assert list(parsed_labels) == list(labels)


def test_parser_rejects_tampering():
    text = build_prompt_text("Is the marker aligned?", 5, [1, 0, 0, 1])
    with pytest.raises(ValueError):
        parse_prompt_text(text.replace("Query:", "Finally:"))
    with pytest.raises(ValueError):
        parse_prompt_text(text + "\n")
    with pytest.raises(ValueError):
        parse_prompt_text(text.replace("Answer: Yes", "Answer: Maybe", 1))
