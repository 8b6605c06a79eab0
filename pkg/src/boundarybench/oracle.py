"""Exact reference solver and dataset audit.

The hypothesis class is every axis-aligned threshold rule: a dimension, a
direction, and a threshold in [0, 1]. Given the demonstrations' target poses
and labels, `consistent_set` computes, for each (dimension, direction) pair,
the exact interval of thresholds that classify every demonstration correctly,
with open/closed endpoints tracked because the classify rule is a strict
inequality. `oracle_predict` then reads the query label off those intervals:
if every consistent hypothesis agrees, the bundle is solvable from its
demonstrations alone.

The audit walks a generated dataset and checks what the generator promises:
balanced demos, labels matching the recorded boundary, margins clear of the
threshold, the ground truth hypothesis surviving `consistent_set`, and image
files present. Records that fail to parse are flagged and skipped, never
fatal, so one corrupt line cannot hide the rest of the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import DecisionBoundary, Pose, classify, margin
from .prompts import parse_prompt_text
from .dataset import DatasetManifest, SPLIT_NAMES


@dataclass(frozen=True)
class TauInterval:
    """Threshold interval with endpoint openness; empty when inverted."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_open or self.hi_open)

    def length(self) -> float:
        return 0.0 if self.is_empty() else self.hi - self.lo

    def contains(self, tau: float) -> bool:
        if self.is_empty():
            return False
        if tau < self.lo or tau > self.hi:
            return False
        if tau == self.lo and self.lo_open:
            return False
        if tau == self.hi and self.hi_open:
            return False
        return True

    def intersect(self, other: "TauInterval") -> "TauInterval":
        if other.lo > self.lo:
            lo, lo_open = other.lo, other.lo_open
        elif other.lo < self.lo:
            lo, lo_open = self.lo, self.lo_open
        else:
            lo, lo_open = self.lo, self.lo_open or other.lo_open
        if other.hi < self.hi:
            hi, hi_open = other.hi, other.hi_open
        elif other.hi > self.hi:
            hi, hi_open = self.hi, self.hi_open
        else:
            hi, hi_open = self.hi, self.hi_open or other.hi_open
        return TauInterval(lo, hi, lo_open, hi_open)


FULL_INTERVAL = TauInterval(0.0, 1.0)


def _demo_constraint(sign: int, coord: float, label: int) -> TauInterval:
    """Thresholds keeping one demonstration correct under direction `sign`.

    label 1 needs sign*(coord - tau) > 0 strictly; label 0 is the complement
    (ties classify as 0), which flips strictness to the closed side.
    """
    if sign == 1:
        return TauInterval(0.0, coord, hi_open=True) if label == 1 \
            else TauInterval(coord, 1.0)
    return TauInterval(coord, 1.0, lo_open=True) if label == 1 \
        else TauInterval(0.0, coord)


@dataclass(frozen=True)
class ConsistentSet:
    """Feasible threshold interval per (dim, sign) hypothesis family."""

    intervals: dict[tuple[int, int], TauInterval]

    @property
    def nonempty_count(self) -> int:
        return sum(1 for iv in self.intervals.values() if not iv.is_empty())

    def contains_boundary(self, boundary: DecisionBoundary) -> bool:
        iv = self.intervals.get((boundary.dim, boundary.sign))
        return iv is not None and iv.contains(boundary.tau)


def consistent_set(demos: list[tuple[tuple[float, ...], int]], d: int) -> ConsistentSet:
    """Exact feasible sets over all 2*d hypothesis families.

    `demos` pairs each demonstration's target pose coordinates with its
    label. Intervals start at [0, 1] and shrink by intersection, so adding a
    demonstration can only narrow them.
    """
    if not demos:
        raise ValueError("need at least one demonstration")
    intervals: dict[tuple[int, int], TauInterval] = {}
    for dim in range(1, d + 1):
        for sign in (-1, 1):
            iv = FULL_INTERVAL
            for coords, label in demos:
                iv = iv.intersect(_demo_constraint(sign, coords[dim - 1], label))
                if iv.is_empty():
                    break
            intervals[(dim, sign)] = iv
    return ConsistentSet(intervals)


@dataclass(frozen=True)
class OraclePrediction:
    label: int | None          # None only when status is "inconsistent"
    status: str                # unanimous | ambiguous | inconsistent
    votes: dict[int, float]    # label -> total feasible threshold measure


def oracle_predict(
    demos: list[tuple[tuple[float, ...], int]],
    query: tuple[float, ...],
    d: int,
) -> OraclePrediction:
    """Predict the query label from the demonstrations alone.

    Each nonempty hypothesis family votes with the labels its thresholds
    assign to the query coordinate; an interval straddling the coordinate
    contributes to both sides. Unanimity means every consistent hypothesis
    agrees (zero-length intervals included); otherwise the majority by
    interval measure wins, ties resolving to 0.
    """
    cset = consistent_set(demos, d)
    votes = {0: 0.0, 1: 0.0}
    seen: set[int] = set()
    for (dim, sign), iv in cset.intervals.items():
        if iv.is_empty():
            continue
        coord = query[dim - 1]
        # label 1 region: sign=+1 -> tau < coord, sign=-1 -> tau > coord.
        if sign == 1:
            one_region = TauInterval(0.0, coord, hi_open=True)
            zero_region = TauInterval(coord, 1.0)
        else:
            one_region = TauInterval(coord, 1.0, lo_open=True)
            zero_region = TauInterval(0.0, coord)
        part_one = iv.intersect(one_region)
        part_zero = iv.intersect(zero_region)
        if not part_one.is_empty():
            seen.add(1)
            votes[1] += part_one.length()
        if not part_zero.is_empty():
            seen.add(0)
            votes[0] += part_zero.length()
    if not seen:
        return OraclePrediction(label=None, status="inconsistent", votes=votes)
    if len(seen) == 1:
        return OraclePrediction(label=seen.pop(), status="unanimous", votes=votes)
    label = 1 if votes[1] > votes[0] else 0
    return OraclePrediction(label=label, status="ambiguous", votes=votes)


@dataclass
class AuditReport:
    """Aggregated dataset health; one flag entry per offending record."""

    n: int = 0
    n_solvable: int = 0
    n_ambiguous: int = 0
    n_unanimous: int = 0
    n_unanimous_correct: int = 0
    margin_min: float | None = None
    balance_ok: bool = True
    flags: list[dict] = field(default_factory=list)

    @property
    def solvable_rate(self) -> float | None:
        return None if self.n == 0 else self.n_solvable / self.n

    @property
    def ambiguity_rate(self) -> float | None:
        return None if self.n == 0 else self.n_ambiguous / self.n

    @property
    def unanimous_accuracy(self) -> float | None:
        if self.n_unanimous == 0:
            return None
        return self.n_unanimous_correct / self.n_unanimous

    @property
    def ok(self) -> bool:
        return self.n > 0 and self.n_solvable == self.n and self.balance_ok \
            and not self.flags

    def flag(self, split: str, line_no: int, bundle_id: str | None, problem: str) -> None:
        self.flags.append({
            "split": split,
            "line": line_no,
            "bundle_id": bundle_id,
            "problem": problem,
        })

    def to_document(self) -> dict:
        return {
            "n": self.n,
            "solvable_rate": self.solvable_rate,
            "ambiguity_rate": self.ambiguity_rate,
            "unanimous_accuracy": self.unanimous_accuracy,
            "margin_min": self.margin_min,
            "balance_ok": self.balance_ok,
            "n_flagged": len(self.flags),
            "flags": self.flags,
            "ok": self.ok,
        }


def _audit_record(report: AuditReport, manifest: DatasetManifest, split: str,
                  line_no: int, rec: dict, check_images: bool) -> None:
    bundle_id = rec.get("bundle_id")
    try:
        boundary = DecisionBoundary(**rec["boundary"])
        demos = rec["demos"]
        query = rec["query"]
        examples = demos + [query]
        demo_labels = [int(d["label"]) for d in demos]
        poses: dict[int, list[Pose]] = {}
        for idx, example in enumerate(examples):
            if int(example["label"]) not in (0, 1):
                raise ValueError(f"bad label {example['label']!r}")
            if not example["objects"]:
                raise ValueError("example with no objects")
            targets = [o for o in example["objects"] if o["is_target"]]
            if len(targets) != 1 or not example["objects"][0]["is_target"]:
                raise ValueError("target object missing or misplaced")
            poses[idx] = [Pose(tuple(float(c) for c in o["xi"]))
                          for o in example["objects"]]
    except (KeyError, TypeError, ValueError) as exc:
        report.flag(split, line_no, bundle_id, f"schema: {exc}")
        return

    report.n += 1
    half = (len(demos) + 1) // 2
    if sum(demo_labels) != half or len(demos) - sum(demo_labels) != half:
        report.balance_ok = False
        report.flag(split, line_no, bundle_id, "demo-label-imbalance")

    try:
        question, parsed_labels = parse_prompt_text(rec["prompt_text"])
        if question != rec["question"] or parsed_labels != demo_labels:
            report.flag(split, line_no, bundle_id, "prompt-mismatch")
    except (KeyError, ValueError) as exc:
        report.flag(split, line_no, bundle_id, f"prompt-mismatch: {exc}")

    constrain_all = manifest.sampler.distractor_mode == "algorithm-faithful"
    label_ok = True
    for idx, example in enumerate(examples):
        y = int(example["label"])
        for obj, pose in zip(example["objects"], poses[idx]):
            if not (obj["is_target"] or constrain_all):
                continue
            m = margin(boundary, pose)
            if report.margin_min is None or m < report.margin_min:
                report.margin_min = m
            if classify(boundary, pose) != y:
                label_ok = False
            if m <= boundary.epsilon:
                report.flag(split, line_no, bundle_id,
                            f"margin-violation: {m:.6f}")
    if not label_ok:
        report.flag(split, line_no, bundle_id, "label-mismatch")

    demo_points = [(poses[i][0].coords, int(d["label"]))
                   for i, d in enumerate(demos)]
    cset = consistent_set(demo_points, manifest.sampler.d)
    solvable = label_ok and cset.contains_boundary(boundary)
    if solvable:
        report.n_solvable += 1
    else:
        report.flag(split, line_no, bundle_id, "ground-truth-inconsistent")

    prediction = oracle_predict(
        demo_points, poses[len(examples) - 1][0].coords, manifest.sampler.d)
    if prediction.status == "ambiguous":
        report.n_ambiguous += 1
    elif prediction.status == "unanimous":
        report.n_unanimous += 1
        if prediction.label == int(query["label"]):
            report.n_unanimous_correct += 1

    if check_images:
        for example in examples:
            img = manifest.split_dir(split) / example["image"]
            if not img.is_file():
                report.flag(split, line_no, bundle_id,
                            f"missing-image: {example['image']}")


def audit_dataset(
    manifest: DatasetManifest,
    splits: tuple[str, ...] = SPLIT_NAMES,
    check_images: bool | None = None,
) -> AuditReport:
    """Audit every record of the chosen splits; never raises on bad records.

    check_images defaults to whether the manifest says images were written.
    """
    if check_images is None:
        check_images = manifest.images_written
    report = AuditReport()
    seen_ids: set[str] = set()
    for split in splits:
        if manifest.splits.count(split) == 0:
            continue
        path = manifest.bundles_path(split)
        if not path.is_file():
            report.flag(split, 0, None, "missing-split-file")
            continue
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    report.flag(split, line_no, None, f"invalid-json: {exc}")
                    continue
                bundle_id = rec.get("bundle_id")
                if bundle_id in seen_ids:
                    report.flag(split, line_no, bundle_id, "duplicate-bundle-id")
                elif isinstance(bundle_id, str):
                    seen_ids.add(bundle_id)
                _audit_record(report, manifest, split, line_no, rec, check_images)
    return report
