"""Answer parsing, significance thresholds, scoring, and run comparison."""

from __future__ import annotations

import json
import math
import statistics

import pytest
from hypothesis import given, strategies as st

from boundarybench import (
    FamilyScore,
    compare_runs,
    correlate_stage_accuracies,
    parse_answer,
    score_family,
    z_threshold,
)
from boundarybench.evaluate import (
    PredictionRecord,
    compliance_rate,
    evaluation_report,
    load_predictions,
    load_truth,
)

# ---------------------------------------------------------------------------
# parsing


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("Yes", 1),
        ("no", 0),
        ("  YES  ", 1),
        ("Answer: Yes", 1),
        ("answer:no", 0),
        ("no, it is not.", 0),
        ("Yes.", 1),
        ("\nAnswer:  NO\n", 0),
        ("maybe", None),
        ("The marker appears misaligned", None),
        ("I think yes", None),          # the first word decides
        ("", None),
        ("42", None),
        ("Answer:", None),
        ("yesterday", None),            # no prefix matching
    ],
)
def test_parse_answer(raw, expected):
    assert parse_answer(raw) == expected


@given(st.text(max_size=40))
def test_parse_answer_total(raw):
    assert parse_answer(raw) in (0, 1, None)


# ---------------------------------------------------------------------------
# the significance threshold


def test_z_threshold_reference_values():
    assert z_threshold(1000, 0.05) == pytest.approx(0.52600659, abs=1e-6)
    assert 0.525 <= z_threshold(1000, 0.05) <= 0.5285
    assert z_threshold(4000, 0.05) == pytest.approx(0.513004, abs=1e-5)
    # two-sided needs a slightly higher bar
    assert z_threshold(1000, 0.05, two_sided=True) > z_threshold(1000, 0.05)
    assert z_threshold(1000, 0.05, two_sided=True) == pytest.approx(
        0.5 + 1.9599639845400545 * math.sqrt(0.25 / 1000), rel=1e-12)


def test_z_threshold_shrinks_with_n():
    values = [z_threshold(n) for n in (10, 100, 1000, 10000)]
    assert values == sorted(values, reverse=True)
    assert values[-1] > 0.5


def test_z_threshold_validation():
    with pytest.raises(ValueError):
        z_threshold(0)
    with pytest.raises(ValueError):
        z_threshold(10, alpha=0.0)
    with pytest.raises(ValueError):
        z_threshold(10, alpha=1.0)


# ---------------------------------------------------------------------------
# scoring


def _truth(n: int) -> dict[str, int]:
    return {f"fam-b{i:07d}": i % 2 for i in range(n)}


def _prediction(bundle_id: str, label: int | None) -> PredictionRecord:
    text = {1: "Yes", 0: "No", None: "unsure"}[label]
    return PredictionRecord(bundle_id=bundle_id, output=text)


def test_score_family_counts():
    truth = _truth(10)
    preds = []
    for i, (bundle_id, label) in enumerate(truth.items()):
        if i < 6:
            preds.append(_prediction(bundle_id, label))        # correct
        elif i < 8:
            preds.append(_prediction(bundle_id, 1 - label))    # wrong
        elif i < 9:
            preds.append(_prediction(bundle_id, None))         # junk
        # i == 9: missing entirely
    score = score_family("fam", truth, preds, alpha=0.05)
    assert score.n == 10
    assert score.n_correct == 6
    assert score.n_compliant == 8
    assert score.accuracy == 0.6
    assert score.compliance_rate == 0.8
    assert score.missing == ("fam-b0000009",)
    doc = score.to_document()
    assert doc["n_missing"] == 1
    assert doc["significant"] == score.significant


def test_score_family_rejects_unknown_ids():
    truth = _truth(4)
    preds = [_prediction("fam-b9999999", 1)]
    with pytest.raises(ValueError, match="fam-b9999999"):
        score_family("fam", truth, preds)


def test_compliance_fixture():
    """2093 parseable answers out of 5000 queries is 41.86 percent."""
    truth = _truth(5000)
    ids = list(truth)
    preds = [_prediction(bundle_id, truth[bundle_id])
             for bundle_id in ids[:2093]]
    preds += [_prediction(bundle_id, None) for bundle_id in ids[2093:]]
    assert compliance_rate(truth, preds) == pytest.approx(0.4186)
    score = score_family("fam", truth, preds)
    assert score.compliance_rate == pytest.approx(0.4186)


def test_all_unparseable_scores_zero():
    truth = _truth(50)
    preds = [_prediction(bundle_id, None) for bundle_id in truth]
    score = score_family("fam", truth, preds)
    assert score.accuracy == 0.0
    assert score.compliance_rate == 0.0
    assert not score.significant


def test_significance_strictly_above_threshold():
    truth = _truth(1000)
    # exactly at the threshold must NOT count as beating chance
    threshold = z_threshold(1000, 0.05)
    n_correct = math.ceil(threshold * 1000)
    ids = list(truth)
    preds = [_prediction(b, truth[b]) for b in ids[:n_correct]]
    preds += [_prediction(b, 1 - truth[b]) for b in ids[n_correct:]]
    score = score_family("fam", truth, preds)
    assert score.n_correct == n_correct
    assert score.significant == (score.accuracy > threshold)


# ---------------------------------------------------------------------------
# prediction and truth files


def test_load_predictions(tmp_path):
    path = tmp_path / "preds.jsonl"
    rows = [{"bundle_id": "a", "output": "Yes"},
            {"bundle_id": "b", "output": "No"}]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    records = load_predictions(path)
    assert [r.bundle_id for r in records] == ["a", "b"]

    path.write_text(json.dumps(rows[0]) + "\n" + json.dumps(rows[0]) + "\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_predictions(path)

    path.write_text("{\"bundle_id\": \"a\"}\n")
    with pytest.raises(ValueError):
        load_predictions(path)


def test_load_truth_from_dataset(metadata_dataset):
    truth = load_truth(metadata_dataset, "test")
    assert len(truth) == 3
    assert set(truth.values()) <= {0, 1}
    for bundle_id in truth:
        assert bundle_id.startswith("bg-i5_obj-hard_m3_text-guide-b")


# ---------------------------------------------------------------------------
# correlation


def test_correlation_fixture():
    xs = [0.1, 0.2, 0.4, 0.5, 0.8]
    ys = [0.3, 0.25, 0.5, 0.6, 0.9]
    result = correlate_stage_accuracies(list(zip(xs, ys)))
    assert result["r_squared"] == pytest.approx(49 / 51, abs=1e-9)
    assert result["pearson_r"] == pytest.approx(0.9801960588196069, abs=1e-9)
    assert result["pearson_r"] == pytest.approx(
        statistics.correlation(xs, ys), abs=1e-12)


def test_correlation_collinear_is_exactly_one():
    pairs = [(0.1, 0.3), (0.2, 0.5), (0.3, 0.7), (0.4, 0.9)]
    result = correlate_stage_accuracies(pairs)
    assert result["r_squared"] == pytest.approx(1.0, abs=1e-12)


def test_correlation_guards():
    with pytest.raises(ValueError):
        correlate_stage_accuracies([(0.1, 0.2), (0.3, 0.4)])
    with pytest.raises(ValueError):
        correlate_stage_accuracies([(0.5, 0.2), (0.5, 0.4), (0.5, 0.6)])


# ---------------------------------------------------------------------------
# reports and comparisons


def _score(family: str, n: int, n_correct: int) -> FamilyScore:
    return FamilyScore(family=family, n=n, n_correct=n_correct,
                       n_compliant=n, alpha=0.05)


def test_evaluation_report_aggregates():
    scores = [_score("f1", 100, 80), _score("f2", 100, 50)]
    report = evaluation_report(scores, alpha=0.05)
    assert report["aggregate"]["n_families"] == 2
    assert report["aggregate"]["mean_accuracy"] == pytest.approx(0.65)
    assert report["aggregate"]["n_significant"] == 1
    assert len(report["families"]) == 2


def test_compare_runs_table():
    run_a = [_score("f1", 100, 60), _score("f2", 100, 50)]
    run_b = [_score("f1", 100, 70), _score("f2", 100, 45)]
    cmp = compare_runs([("base", run_a), ("curr", run_b)])
    assert cmp.families == ("f1", "f2")
    doc = cmp.to_document()
    assert doc["baseline"] == "base"
    row_f1 = next(r for r in doc["rows"] if r["family"] == "f1")
    assert row_f1["delta"]["curr"] == pytest.approx(0.10)
    text = cmp.render_text()
    assert "f1" in text and "d:curr" in text
    assert "*" in text                       # at least one significant cell


def test_compare_runs_guards():
    run = [_score("f1", 10, 5)]
    with pytest.raises(ValueError):
        compare_runs([("solo", run)])
    with pytest.raises(ValueError):
        compare_runs([("a", run), ("a", run)])
    other = [_score("f2", 10, 5)]
    with pytest.raises(ValueError, match="f2"):
        compare_runs([("a", run), ("b", other)])
