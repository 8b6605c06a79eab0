"""bundle-runner command line.

    bundle-runner DATASET_ROOT --family bg-i5_obj-hard_m3_text-guide \
        --endpoint http://localhost:8000/v1/chat/completions \
        --model my-vlm --out predictions.jsonl

Exit 0 when the run completes (even with per-record failures, which are
summarized and written as empty outputs); 1 when the endpoint is down or a
record is malformed; 2 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .client import EndpointDownError, PayloadError, RunnerConfig
from .run import run_split


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundle-runner",
        description="answer generated bundles through a chat endpoint")
    parser.add_argument("dataset", help="dataset root (contains families/)")
    parser.add_argument("--family", default=None,
                        help="family id (optional when the root holds exactly one)")
    parser.add_argument("--split", default="test",
                        choices=("train", "val", "test"))
    parser.add_argument("--endpoint", required=True,
                        help="chat-completions URL")
    parser.add_argument("--model", required=True)
    parser.add_argument("--out", required=True, help="predictions JSONL path")
    parser.add_argument("--max-new-tokens", type=int, default=5)
    parser.add_argument("--concurrency", type=int, default=4)
    parser.add_argument("--max-attempts", type=int, default=3)
    parser.add_argument("--backoff", type=float, default=0.25,
                        help="base retry delay, seconds (doubles per attempt)")
    parser.add_argument("--timeout", type=float, default=30.0)
    parser.add_argument("--no-resume", action="store_true",
                        help="overwrite --out instead of resuming into it")
    return parser


def _find_family_dir(root: Path, family: str | None) -> Path:
    base = root / "families"
    if family is not None:
        return base / family
    candidates = sorted(d for d in base.iterdir() if d.is_dir()) \
        if base.is_dir() else []
    if len(candidates) != 1:
        raise PayloadError(
            f"{root} holds {len(candidates)} families; pick one with --family")
    return candidates[0]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunnerConfig(
        endpoint=args.endpoint, model=args.model,
        max_new_tokens=args.max_new_tokens, concurrency=args.concurrency,
        max_attempts=args.max_attempts, backoff_s=args.backoff,
        timeout_s=args.timeout)
    try:
        family_dir = _find_family_dir(Path(args.dataset), args.family)
        summary = run_split(family_dir, args.split, config, args.out,
                            resume=not args.no_resume)
    except (EndpointDownError, PayloadError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(summary.describe())
    print(f"predictions written to {args.out}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
