"""End-to-end runs against the mock endpoint, scored by the real harness."""

from __future__ import annotations

import json
import shutil
import signal
import socket
import subprocess
import sys
import time

import pytest

from bundle_runner import RunnerConfig, run_split
from bundle_runner.cli import main as runner_main

from mock_endpoint import FAMILY, N_TEST, run_generator


def fast_config(url: str, **overrides) -> RunnerConfig:
    defaults = dict(endpoint=url, model="mock-vlm", concurrency=4,
                    max_attempts=3, backoff_s=0.01, timeout_s=10.0)
    defaults.update(overrides)
    return RunnerConfig(**defaults)


def read_predictions(path) -> dict[str, str]:
    out = {}
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        out[rec["bundle_id"]] = rec["output"]
    return out


def query_labels(family_dir) -> dict[str, int]:
    lines = (family_dir / "test" / "bundles.jsonl").read_text().splitlines()
    return {r["bundle_id"]: r["query"]["label"]
            for r in map(json.loads, lines)}


# -- the happy path, scored by the real harness ------------------------------

def test_twenty_bundle_run_scores_cleanly(dataset, family_dir, endpoint, tmp_path):
    endpoint.configure(reply="Yes")
    out = tmp_path / "predictions.jsonl"
    code = runner_main([str(dataset), "--family", FAMILY,
                        "--endpoint", endpoint.url, "--model", "mock-vlm",
                        "--out", str(out)])
    assert code == 0

    predictions = read_predictions(out)
    assert len(predictions) == N_TEST
    assert set(predictions.values()) == {"Yes"}

    # every payload the endpoint saw carried exactly N image parts
    assert len(endpoint.seen) == N_TEST
    for seen in endpoint.seen:
        parts = seen["payload"]["messages"][0]["content"]
        images = [p for p in parts if p["type"] == "image_url"]
        assert len(images) == 5

    report_path = tmp_path / "report.json"
    proc = run_generator(["evaluate", "--dataset", str(dataset),
                          "--predictions", str(out),
                          "--report", str(report_path)])
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    (family_row,) = report["families"]
    assert family_row["family"] == FAMILY
    assert family_row["n"] == N_TEST
    assert family_row["n_missing"] == 0
    assert family_row["compliance_rate"] == 1.0
    # an all-Yes predictor scores exactly the label-1 fraction
    labels = query_labels(family_dir)
    assert family_row["n_correct"] == sum(labels.values())


def test_runs_are_deterministic_for_a_deterministic_endpoint(
        dataset, family_dir, endpoint, tmp_path):
    endpoint.configure(reply=lambda payload: "No")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        code = runner_main([str(dataset), "--endpoint", endpoint.url,
                            "--model", "mock-vlm", "--out", str(out)])
        assert code == 0
    assert read_predictions(a) == read_predictions(b)


# -- resume ------------------------------------------------------------------

def test_resume_after_kill_yields_exactly_n_unique_records(
        dataset, family_dir, endpoint, tmp_path):
    endpoint.configure(reply="Yes", delay_s=0.15)
    out = tmp_path / "predictions.jsonl"
    proc = subprocess.Popen(
        [sys.executable, "-m", "bundle_runner", str(dataset),
         "--family", FAMILY, "--endpoint", endpoint.url,
         "--model", "mock-vlm", "--out", str(out), "--concurrency", "1"])
    try:
        deadline = time.monotonic() + 30
        while time.monotonic() < deadline:
            if out.exists() and out.read_text().count("\n") >= 4:
                break
            time.sleep(0.02)
        else:
            pytest.fail("runner made no progress before the kill")
    finally:
        proc.send_signal(signal.SIGKILL)
        proc.wait()

    survived = out.read_text().count("\n")
    assert 4 <= survived < N_TEST

    time.sleep(0.5)                        # let any in-flight handler drain
    endpoint.configure(reply="Yes")        # also resets the request counter
    code = runner_main([str(dataset), "--family", FAMILY,
                        "--endpoint", endpoint.url, "--model", "mock-vlm",
                        "--out", str(out)])
    assert code == 0
    predictions = read_predictions(out)
    assert len(predictions) == N_TEST
    assert out.read_text().count("\n") == N_TEST    # unique, no duplicates
    assert len(endpoint.seen) == N_TEST - survived  # resumed, not redone

    proc = run_generator(["evaluate", "--dataset", str(dataset),
                          "--predictions", str(out)])
    assert proc.returncode == 0, proc.stderr


def test_resume_salvages_truncated_and_duplicate_lines(
        dataset, family_dir, endpoint, tmp_path):
    labels = query_labels(family_dir)
    some_id = sorted(labels)[0]
    out = tmp_path / "predictions.jsonl"
    good = json.dumps({"bundle_id": some_id, "output": "No"})
    out.write_text(good + "\n" + good + "\n"          # duplicate
                   + '{"bundle_id": "tr')             # truncated by a kill

    endpoint.configure(reply="Yes")
    summary = run_split(family_dir, "test", fast_config(endpoint.url), out)
    assert summary.n_resumed == 1
    predictions = read_predictions(out)
    assert len(predictions) == N_TEST
    assert predictions[some_id] == "No"               # kept, not re-asked
    assert len(endpoint.seen) == N_TEST - 1


def test_no_resume_overwrites(dataset, family_dir, endpoint, tmp_path):
    out = tmp_path / "predictions.jsonl"
    out.write_text(json.dumps({"bundle_id": "stale", "output": "Yes"}) + "\n")
    endpoint.configure(reply="No")
    code = runner_main([str(dataset), "--endpoint", endpoint.url,
                        "--model", "mock-vlm", "--out", str(out),
                        "--no-resume"])
    assert code == 0
    assert "stale" not in read_predictions(out)


# -- failure modes -----------------------------------------------------------

def test_transient_errors_are_retried(dataset, family_dir, endpoint, tmp_path):
    endpoint.configure(reply="Yes", fail_first=2)
    out = tmp_path / "predictions.jsonl"
    summary = run_split(family_dir, "test",
                        fast_config(endpoint.url, concurrency=1), out)
    assert summary.n_failed == 0
    assert summary.n_answered == N_TEST
    assert set(read_predictions(out).values()) == {"Yes"}


def test_retry_exhaustion_writes_empty_outputs_and_continues(
        dataset, family_dir, endpoint, tmp_path, capsys):
    endpoint.configure(always_fail=True)
    out = tmp_path / "predictions.jsonl"
    code = runner_main([str(dataset), "--endpoint", endpoint.url,
                        "--model", "mock-vlm", "--out", str(out),
                        "--max-attempts", "2", "--backoff", "0.01"])
    assert code == 0                       # the run completed; records failed
    printed = capsys.readouterr().out
    assert f"{N_TEST} failed" in printed

    predictions = read_predictions(out)
    assert len(predictions) == N_TEST
    assert set(predictions.values()) == {""}

    # empty outputs score as noncompliant, never as crashes
    proc = run_generator(["evaluate", "--dataset", str(dataset),
                          "--predictions", str(out)])
    assert proc.returncode == 0, proc.stderr
    assert "acc=0.0000 compliance=0.0000" in proc.stdout


def test_endpoint_down_aborts_nonzero_and_preserves_partials(
        dataset, family_dir, tmp_path, capsys):
    labels = query_labels(family_dir)
    out = tmp_path / "predictions.jsonl"
    existing = json.dumps({"bundle_id": sorted(labels)[0], "output": "Yes"})
    out.write_text(existing + "\n")

    # a port with nothing listening: bind-and-release
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        dead_port = sock.getsockname()[1]

    code = runner_main([str(dataset), "--endpoint",
                        f"http://127.0.0.1:{dead_port}/v1/chat/completions",
                        "--model", "mock-vlm", "--out", str(out)])
    assert code == 1
    assert "error:" in capsys.readouterr().err
    assert out.read_text() == existing + "\n"


def test_missing_image_becomes_noncompliant_record(
        dataset, family_dir, endpoint, tmp_path):
    # clone the family dir, delete one image
    clone_root = tmp_path / "clone"
    shutil.copytree(dataset, clone_root)
    clone_family = clone_root / "families" / FAMILY
    victim = sorted((clone_family / "test" / "images").glob("*_q.png"))[0]
    victim_bundle = victim.name[: -len("_q.png")]
    victim.unlink()

    endpoint.configure(reply="Yes")
    out = tmp_path / "predictions.jsonl"
    summary = run_split(clone_family, "test", fast_config(endpoint.url), out)
    assert summary.n_failed == 1
    assert summary.failures[0].startswith(victim_bundle)
    predictions = read_predictions(out)
    assert predictions[victim_bundle] == ""
    assert len(predictions) == N_TEST


# -- authentication ----------------------------------------------------------

def test_api_key_env_var_becomes_bearer_header(
        dataset, family_dir, endpoint, tmp_path, monkeypatch):
    endpoint.configure(reply="Yes")
    out = tmp_path / "a.jsonl"
    monkeypatch.setenv("BUNDLE_RUNNER_API_KEY", "sk-local-test")
    run_split(family_dir, "test", fast_config(endpoint.url), out)
    assert {s["auth"] for s in endpoint.seen} == {"Bearer sk-local-test"}

    endpoint.configure(reply="Yes")
    monkeypatch.delenv("BUNDLE_RUNNER_API_KEY")
    run_split(family_dir, "test", fast_config(endpoint.url), tmp_path / "b.jsonl")
    assert {s["auth"] for s in endpoint.seen} == {None}
