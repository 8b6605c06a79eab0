"""Scoring of external model predictions.

Protocol: exact-match accuracy over yes/no answers, with a one-sided
one-sample z-test against chance (p0 = 0.5) deciding whether a family's
accuracy is significantly better than guessing. Unparseable outputs count as
noncompliant and incorrect; missing predictions likewise, but they are also
listed so silent coverage gaps cannot masquerade as model failures.
"""

from __future__ import annotations

import json
import math
import re
import statistics
from dataclasses import dataclass
from pathlib import Path

from .dataset import FORMAT_VERSION, DatasetManifest, iter_records
from .model import ConfigError

_FIRST_WORD = re.compile(r"[A-Za-z]+")
_ANSWER_TAG = re.compile(r"^\s*answer\s*:\s*", re.IGNORECASE)


def parse_answer(raw_output: str) -> int | None:
    """Map raw model text to 1 (yes), 0 (no), or None (noncompliant).

    Tolerates surrounding whitespace, one leading "Answer:" tag, and
    trailing punctuation; the first alphabetic token decides, so "no, it
    is not." parses but "I think yes" does not.
    """
    text = _ANSWER_TAG.sub("", raw_output.strip(), count=1)
    match = _FIRST_WORD.search(text)
    if match is None:
        return None
    word = match.group(0).lower()
    if word == "yes":
        return 1
    if word == "no":
        return 0
    return None


def z_threshold(n: int, alpha: float = 0.05, two_sided: bool = False) -> float:
    """Accuracy needed to beat chance at level alpha on n trials:
    0.5 + z * sqrt(0.25 / n), z the normal quantile for 1 - alpha
    (or 1 - alpha/2 two-sided)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (0 < alpha < 1):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    q = 1 - alpha / 2 if two_sided else 1 - alpha
    z = statistics.NormalDist().inv_cdf(q)
    return 0.5 + z * math.sqrt(0.25 / n)


@dataclass(frozen=True)
class PredictionRecord:
    bundle_id: str
    output: str


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read a predictions JSONL file; duplicate bundle_ids are hard errors."""
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    dupes: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                rec = PredictionRecord(bundle_id=raw["bundle_id"],
                                       output=str(raw["output"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad prediction record: {exc}") from None
            if rec.bundle_id in seen:
                dupes.append(rec.bundle_id)
            seen.add(rec.bundle_id)
            records.append(rec)
    if dupes:
        raise ValueError(f"duplicate bundle_ids in {path}: {sorted(set(dupes))}")
    return records


def load_truth(manifest: DatasetManifest, split: str = "test") -> dict[str, int]:
    """bundle_id -> ground-truth query label for one split."""
    truth: dict[str, int] = {}
    for _, rec in iter_records(manifest, split):
        truth[rec["bundle_id"]] = int(rec["query"]["label"])
    if not truth:
        raise ConfigError(
            f"no records in split {split!r} of {manifest.family_id}")
    return truth


@dataclass(frozen=True)
class FamilyScore:
    family: str
    n: int
    n_correct: int
    n_compliant: int
    alpha: float
    missing: tuple[str, ...] = ()

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n

    @property
    def compliance_rate(self) -> float:
        return self.n_compliant / self.n

    @property
    def z_threshold(self) -> float:
        return z_threshold(self.n, self.alpha)

    @property
    def z_threshold_two_sided(self) -> float:
        return z_threshold(self.n, self.alpha, two_sided=True)

    @property
    def significant(self) -> bool:
        return self.accuracy > self.z_threshold

    def to_document(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "n_correct": self.n_correct,
            "n_compliant": self.n_compliant,
            "accuracy": self.accuracy,
            "compliance_rate": self.compliance_rate,
            "alpha": self.alpha,
            "z_threshold": self.z_threshold,
            "z_threshold_two_sided": self.z_threshold_two_sided,
            "significant": self.significant,
            "n_missing": len(self.missing),
            "missing": list(self.missing),
        }


def score_family(
    family: str,
    truth: dict[str, int],
    predictions: list[PredictionRecord],
    alpha: float = 0.05,
) -> FamilyScore:
    """Score one family's predictions against its ground truth.

    Predictions for unknown bundle_ids are hard errors (they signal a
    dataset/predictions mismatch); missing predictions score as incorrect
    and noncompliant but are reported by id.
    """
    unknown = sorted(p.bundle_id for p in predictions if p.bundle_id not in truth)
    if unknown:
        raise ValueError(
            f"predictions reference bundle_ids absent from family {family}: "
            f"{unknown[:10]}{' ...' if len(unknown) > 10 else ''}")
    by_id = {p.bundle_id: p for p in predictions}
    n_correct = 0
    n_compliant = 0
    missing: list[str] = []
    for bundle_id, label in truth.items():
        pred = by_id.get(bundle_id)
        if pred is None:
            missing.append(bundle_id)
            continue
        parsed = parse_answer(pred.output)
        if parsed is not None:
            n_compliant += 1
            if parsed == label:
                n_correct += 1
    return FamilyScore(
        family=family, n=len(truth), n_correct=n_correct,
        n_compliant=n_compliant, alpha=alpha, missing=tuple(sorted(missing)))


def compliance_rate(truth: dict[str, int], predictions: list[PredictionRecord]) -> float:
    """Fraction of the truth set whose prediction parses to yes/no."""
    by_id = {p.bundle_id: p for p in predictions}
    compliant = sum(
        1 for bundle_id in truth
        if bundle_id in by_id and parse_answer(by_id[bundle_id].output) is not None)
    return compliant / len(truth)


def correlate_stage_accuracies(pairs: list[tuple[float, float]]) -> dict[str, float]:
    """Pearson r and r^2 over (x, y) accuracy pairs from separate runs."""
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(pairs)}")
    xs = [float(x) for x, _ in pairs]
    ys = [float(y) for _, y in pairs]
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise ValueError("correlation undefined: a series is constant")
    r = statistics.correlation(xs, ys)
    return {"pearson_r": r, "r_squared": r * r}


def evaluation_report(scores: list[FamilyScore], alpha: float) -> dict:
    """Single JSON-ready document for a scored run."""
    return {
        "format_version": FORMAT_VERSION,
        "alpha": alpha,
        "families": [s.to_document() for s in scores],
        "aggregate": {
            "n_families": len(scores),
            "mean_accuracy": (sum(s.accuracy for s in scores) / len(scores))
            if scores else None,
            "mean_compliance": (sum(s.compliance_rate for s in scores) / len(scores))
            if scores else None,
            "n_significant": sum(1 for s in scores if s.significant),
        },
    }


@dataclass(frozen=True)
class RunComparison:
    labels: tuple[str, ...]
    families: tuple[str, ...]
    accuracies: dict[str, dict[str, float]]      # label -> family -> accuracy
    significant: dict[str, dict[str, bool]]
    aggregates: dict[str, float]

    def to_document(self) -> dict:
        rows = []
        base = self.labels[0]
        for fam in self.families:
            row = {"family": fam}
            for label in self.labels:
                row[label] = {
                    "accuracy": self.accuracies[label][fam],
                    "significant": self.significant[label][fam],
                }
            row["delta"] = {
                label: self.accuracies[label][fam] - self.accuracies[base][fam]
                for label in self.labels[1:]
            }
            rows.append(row)
        return {
            "format_version": FORMAT_VERSION,
            "labels": list(self.labels),
            "baseline": base,
            "rows": rows,
            "aggregate": dict(self.aggregates),
        }

    def render_text(self) -> str:
        base = self.labels[0]
        width = max(len(f) for f in self.families) if self.families else 6
        header = ["family".ljust(width)]
        for label in self.labels:
            header.append(f"{label:>12}")
        for label in self.labels[1:]:
            header.append(f"d:{label}".rjust(12))
        lines = ["  ".join(header)]
        for fam in self.families:
            cells = [fam.ljust(width)]
            for label in self.labels:
                acc = self.accuracies[label][fam]
                mark = "*" if self.significant[label][fam] else " "
                cells.append(f"{acc:11.4f}{mark}")
            for label in self.labels[1:]:
                delta = self.accuracies[label][fam] - self.accuracies[base][fam]
                cells.append(f"{delta:+12.4f}")
            lines.append("  ".join(cells))
        agg = "  ".join(
            f"{label}={self.aggregates[label]:.4f}" for label in self.labels)
        lines.append(f"mean accuracy: {agg}  (* = beats chance)")
        return "\n".join(lines) + "\n"


def compare_runs(runs: list[tuple[str, list[FamilyScore]]]) -> RunComparison:
    """Align multiple scored runs family-by-family.

    Runs must cover identical family sets; any mismatch is an error listing
    the symmetric difference.
    """
    if len(runs) < 2:
        raise ValueError("need at least two runs to compare")
    labels = tuple(label for label, _ in runs)
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate run labels: {labels}")
    family_sets = {label: {s.family for s in scores} for label, scores in runs}
    base_label = labels[0]
    base_set = family_sets[base_label]
    for label in labels[1:]:
        if family_sets[label] != base_set:
            diff = sorted(family_sets[label] ^ base_set)
            raise ValueError(
                f"family sets differ between runs {base_label!r} and {label!r}: {diff}")
    families = tuple(sorted(base_set))
    accuracies = {
        label: {s.family: s.accuracy for s in scores} for label, scores in runs}
    significant = {
        label: {s.family: s.significant for s in scores} for label, scores in runs}
    aggregates = {
        label: sum(s.accuracy for s in scores) / len(scores)
        for label, scores in runs}
    return RunComparison(
        labels=labels, families=families, accuracies=accuracies,
        significant=significant, aggregates=aggregates)
