"""Request construction and the retrying HTTP call."""

from __future__ import annotations

import base64
import os
import time
from dataclasses import dataclass
from pathlib import Path

import requests

API_KEY_ENV = "BUNDLE_RUNNER_API_KEY"


class PayloadError(ValueError):
    """The record and its prompt disagree; the dataset is malformed."""


class RequestFailed(RuntimeError):
    """All attempts for one record failed; the record scores noncompliant."""


class EndpointDownError(RuntimeError):
    """Nobody is listening at the endpoint; the whole run must stop."""


@dataclass(frozen=True)
class RunnerConfig:
    endpoint: str
    model: str
    max_new_tokens: int = 5
    temperature: float = 0.0       # greedy; the benchmark needs one token
    concurrency: int = 4
    max_attempts: int = 3
    backoff_s: float = 0.25
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_s < 0 or self.timeout_s <= 0:
            raise ValueError("backoff_s must be >= 0 and timeout_s > 0")


def _image_part(path: Path) -> dict:
    encoded = base64.b64encode(path.read_bytes()).decode("ascii")
    return {
        "type": "image_url",
        "image_url": {"url": f"data:image/png;base64,{encoded}"},
    }


def build_request(record: dict, images_root: Path, config: RunnerConfig) -> dict:
    """One bundle record -> one chat-completions payload.

    The prompt text is split at its "<image>" placeholders and interleaved
    with the bundle's images (demos in order, then the query), so an N-image
    bundle yields N image parts and N + 1 text parts. A count mismatch
    between placeholders and image references means the record is corrupt
    and raises PayloadError; an unreadable image file raises FileNotFoundError
    so the caller can decide whether that is fatal.
    """
    segments = record["prompt_text"].split("<image>")
    refs = [demo["image"] for demo in record["demos"]]
    refs.append(record["query"]["image"])
    if len(segments) != len(refs) + 1:
        raise PayloadError(
            f"{record['bundle_id']}: prompt has {len(segments) - 1} image "
            f"placeholders but the record lists {len(refs)} images")

    parts: list[dict] = []
    for i, segment in enumerate(segments):
        parts.append({"type": "text", "text": segment})
        if i < len(refs):
            parts.append(_image_part(images_root / refs[i]))

    return {
        "model": config.model,
        "temperature": config.temperature,
        "max_tokens": config.max_new_tokens,
        "messages": [{"role": "user", "content": parts}],
    }


def _headers() -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(API_KEY_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def call_endpoint(payload: dict, config: RunnerConfig,
                  session: requests.Session) -> str:
    """POST the payload, return the model's text.

    Retries with exponential backoff on HTTP errors, timeouts, and malformed
    responses; raises RequestFailed when attempts run out. A refused
    connection raises EndpointDownError immediately: retrying every record
    against a dead server would just grind through the dataset writing
    blanks.
    """
    last_error = "no attempts made"
    for attempt in range(1, config.max_attempts + 1):
        try:
            response = session.post(config.endpoint, json=payload,
                                    headers=_headers(),
                                    timeout=config.timeout_s)
        except requests.exceptions.ConnectionError as exc:
            raise EndpointDownError(f"cannot reach {config.endpoint}: {exc}") from exc
        except requests.exceptions.RequestException as exc:
            last_error = f"request error: {exc}"
        else:
            if response.status_code == 200:
                try:
                    return str(response.json()["choices"][0]["message"]["content"])
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    last_error = f"malformed response body: {exc}"
            else:
                last_error = f"HTTP {response.status_code}"
        if attempt < config.max_attempts:
            time.sleep(config.backoff_s * 2 ** (attempt - 1))
    raise RequestFailed(
        f"gave up after {config.max_attempts} attempts ({last_error})")
