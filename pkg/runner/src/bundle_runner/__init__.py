"""Feed generated bundles to a chat endpoint, collect prediction files.

This package deliberately knows nothing about how bundles are made. It
reads the dataset files the generator writes (family.json, bundles.jsonl,
the images directory) and emits the predictions JSONL the scoring harness
reads. Everything in between is HTTP.
"""

from .client import (
    API_KEY_ENV,
    EndpointDownError,
    PayloadError,
    RequestFailed,
    RunnerConfig,
    build_request,
    call_endpoint,
)
from .run import RunSummary, run_split

__all__ = [
    "API_KEY_ENV",
    "EndpointDownError",
    "PayloadError",
    "RequestFailed",
    "RunSummary",
    "RunnerConfig",
    "build_request",
    "call_endpoint",
    "run_split",
]
