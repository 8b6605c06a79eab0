"""Request construction against real generated records."""

from __future__ import annotations

import base64
import json

import pytest

from bundle_runner import PayloadError, RunnerConfig, build_request

CONFIG = RunnerConfig(endpoint="http://unused.invalid", model="test-vlm")


def read_records(family_dir, split="test"):
    path = family_dir / split / "bundles.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_payload_interleaves_five_images_and_six_text_parts(family_dir):
    record = read_records(family_dir)[0]
    payload = build_request(record, family_dir / "test", CONFIG)

    assert payload["model"] == "test-vlm"
    assert payload["max_tokens"] == 5
    assert payload["temperature"] == 0.0
    (message,) = payload["messages"]
    assert message["role"] == "user"

    parts = message["content"]
    kinds = [p["type"] for p in parts]
    assert kinds == ["text", "image_url"] * 5 + ["text"]
    assert kinds.count("image_url") == 5
    assert kinds.count("text") == 6

    texts = [p["text"] for p in parts if p["type"] == "text"]
    assert texts[0].startswith("Please answer")
    assert texts[-1].endswith("Answer: ")
    # stitching the text back together with placeholders is the identity
    assert "<image>".join(texts) == record["prompt_text"]


def test_image_parts_carry_the_actual_image_bytes(family_dir):
    record = read_records(family_dir)[0]
    payload = build_request(record, family_dir / "test", CONFIG)
    parts = payload["messages"][0]["content"]
    image_parts = [p for p in parts if p["type"] == "image_url"]
    refs = [d["image"] for d in record["demos"]] + [record["query"]["image"]]
    for part, ref in zip(image_parts, refs):
        url = part["image_url"]["url"]
        prefix = "data:image/png;base64,"
        assert url.startswith(prefix)
        decoded = base64.b64decode(url[len(prefix):])
        assert decoded == (family_dir / "test" / ref).read_bytes()
        assert decoded[:8] == b"\x89PNG\r\n\x1a\n"


def test_payload_is_deterministic(family_dir):
    record = read_records(family_dir)[3]
    a = build_request(record, family_dir / "test", CONFIG)
    b = build_request(record, family_dir / "test", CONFIG)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_placeholder_count_mismatch_is_a_hard_error(family_dir):
    record = read_records(family_dir)[0]
    record["prompt_text"] += " <image>"
    with pytest.raises(PayloadError, match="placeholders"):
        build_request(record, family_dir / "test", CONFIG)


def test_missing_image_file_raises_for_the_caller(family_dir, tmp_path):
    record = read_records(family_dir)[0]
    with pytest.raises(FileNotFoundError):
        build_request(record, tmp_path, CONFIG)   # wrong root, no images


@pytest.mark.parametrize("overrides", [
    {"max_new_tokens": 0},
    {"concurrency": 0},
    {"max_attempts": 0},
    {"backoff_s": -0.1},
    {"timeout_s": 0.0},
])
def test_config_rejects_nonsense(overrides):
    with pytest.raises(ValueError):
        RunnerConfig(endpoint="http://x.invalid", model="m", **overrides)
