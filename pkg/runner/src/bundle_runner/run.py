"""Drive one split through the endpoint and write the predictions file."""

from __future__ import annotations

import json
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .client import RequestFailed, RunnerConfig, build_request, call_endpoint


@dataclass
class RunSummary:
    n_total: int
    n_resumed: int
    n_answered: int
    n_failed: int
    failures: list[str] = field(default_factory=list)

    def describe(self) -> str:
        line = (f"{self.n_total} bundles: {self.n_resumed} already present, "
                f"{self.n_answered} answered, {self.n_failed} failed")
        if self.failures:
            shown = ", ".join(self.failures[:5])
            more = "" if len(self.failures) <= 5 else f" (+{len(self.failures) - 5} more)"
            line += f"\nfailed: {shown}{more}"
        return line


def _load_records(family_dir: Path, split: str) -> list[dict]:
    if not (family_dir / "family.json").is_file():
        raise FileNotFoundError(
            f"{family_dir} is not a family directory (no family.json)")
    bundles = family_dir / split / "bundles.jsonl"
    if not bundles.is_file():
        raise FileNotFoundError(f"no such split file: {bundles}")
    with open(bundles, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _salvage_partial(out_path: Path) -> set[str]:
    """Keep every complete, first-seen prediction line; drop the rest.

    A killed run may leave a truncated final line or (after repeated
    crash-resume cycles) duplicates; both would poison the scorer, so the
    file is rewritten clean before appending resumes.
    """
    kept: list[str] = []
    seen: set[str] = set()
    dirty = False
    with open(out_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                dirty = True          # truncated by a kill mid-write
                continue
            try:
                record = json.loads(line)
                bundle_id = record["bundle_id"]
                record["output"]
            except (json.JSONDecodeError, KeyError, TypeError):
                dirty = True
                continue
            if bundle_id in seen:
                dirty = True
                continue
            seen.add(bundle_id)
            kept.append(line)
    if dirty:
        tmp = out_path.with_suffix(out_path.suffix + ".tmp")
        tmp.write_text("".join(kept), encoding="utf-8")
        tmp.replace(out_path)
    return seen


def _answer_one(record: dict, images_root: Path, config: RunnerConfig,
                session: requests.Session) -> tuple[str, str, str | None]:
    """Returns (bundle_id, output_text, error). Empty output on failure."""
    bundle_id = record["bundle_id"]
    try:
        payload = build_request(record, images_root, config)
    except FileNotFoundError as exc:
        return bundle_id, "", f"missing image: {exc}"
    try:
        return bundle_id, call_endpoint(payload, config, session), None
    except RequestFailed as exc:
        return bundle_id, "", str(exc)


def run_split(
    family_dir: str | Path,
    split: str,
    config: RunnerConfig,
    out_path: str | Path,
    resume: bool = True,
) -> RunSummary:
    """Answer every bundle of one split, appending {bundle_id, output} lines.

    Requests run concurrently (config.concurrency in flight); writes go
    through this thread only, flushed per line, so an interrupted run keeps
    everything it finished. With resume on (the default) a rerun skips ids
    already present in out_path. Per-record failures are recorded with empty
    output and the run continues; PayloadError and EndpointDownError
    propagate because neither can improve by moving on to the next bundle.
    """
    family_dir = Path(family_dir)
    out_path = Path(out_path)
    records = _load_records(family_dir, split)
    images_root = family_dir / split

    done: set[str] = set()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if resume and out_path.exists():
        done = _salvage_partial(out_path)
    else:
        out_path.write_text("", encoding="utf-8")

    todo = [r for r in records if r["bundle_id"] not in done]
    summary = RunSummary(n_total=len(records),
                         n_resumed=len(records) - len(todo),
                         n_answered=0, n_failed=0)

    with requests.Session() as session, \
            open(out_path, "a", encoding="utf-8", newline="\n") as fh, \
            ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        pending: set[Future] = {
            pool.submit(_answer_one, record, images_root, config, session)
            for record in todo
        }
        try:
            while pending:
                finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                for future in finished:
                    bundle_id, output, error = future.result()
                    fh.write(json.dumps({"bundle_id": bundle_id,
                                         "output": output},
                                        sort_keys=True) + "\n")
                    fh.flush()
                    if error is None:
                        summary.n_answered += 1
                    else:
                        summary.n_failed += 1
                        summary.failures.append(f"{bundle_id}: {error}")
        except BaseException:
            for future in pending:
                future.cancel()
            raise
    summary.failures.sort()
    return summary
