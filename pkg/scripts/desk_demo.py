"""Generate a small dataset, audit it, score an interval-oracle predictor.

Desk-scale smoke run of the whole pipeline. With defaults this renders one
family at 10/2/10 splits, audits every record, answers the test split with
the hypothesis-set oracle, and prints the resulting score line. Use
--paper-grid to do the same across all fifty families (a couple of minutes).
"""

from __future__ import annotations

import argparse
import sys
import tempfile
import time
from pathlib import Path

from boundarybench import (
    SplitSpec,
    audit_dataset,
    enumerate_paper_grid,
    generate_family,
    oracle_predict,
    parse_family_id,
    score_family,
)
from boundarybench.dataset import iter_records
from boundarybench.evaluate import PredictionRecord, load_truth


def oracle_answers(manifest, split: str) -> list[PredictionRecord]:
    out = []
    for _, rec in iter_records(manifest, split):
        demos = [(tuple(d["objects"][0]["xi"]), int(d["label"]))
                 for d in rec["demos"]]
        query = tuple(rec["query"]["objects"][0]["xi"])
        guess = oracle_predict(demos, query, d=2)
        out.append(PredictionRecord(
            bundle_id=rec["bundle_id"],
            output="Yes" if guess.label == 1 else "No"))
    return out


def run_family(family, splits, seed, out_root, workers):
    t0 = time.perf_counter()
    manifest = generate_family(family, splits, seed, out_root, workers=workers)
    gen_s = time.perf_counter() - t0

    report = audit_dataset(manifest)
    if not report.ok:
        print(f"AUDIT FAILED for {manifest.family_id}:", file=sys.stderr)
        for flag in report.flags[:20]:
            print(f"  {flag}", file=sys.stderr)
        return None

    truth = load_truth(manifest, "test")
    score = score_family(manifest.family_id, truth,
                         oracle_answers(manifest, "test"))
    print(f"{manifest.family_id:42s} gen {gen_s:5.1f}s "
          f"solvable {report.solvable_rate:.2f} "
          f"oracle-acc {score.accuracy:.3f}"
          f"{' *' if score.significant else ''}")
    return score


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--family", default="bg-i5_obj-hard_m3_text-guide")
    ap.add_argument("--paper-grid", action="store_true",
                    help="run every family instead of just --family")
    ap.add_argument("--splits", default="10,2,10")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None,
                    help="dataset root (default: a temp directory)")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    train, val, test = (int(x) for x in args.splits.split(","))
    splits = SplitSpec(train=train, val=val, test=test)
    families = (enumerate_paper_grid() if args.paper_grid
                else [parse_family_id(args.family)])

    out_root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="deskdemo_"))
    print(f"writing to {out_root}")

    scores = []
    for family in families:
        score = run_family(family, splits, args.seed, out_root, args.workers)
        if score is None:
            return 1
        scores.append(score)

    if len(scores) > 1:
        mean = sum(s.accuracy for s in scores) / len(scores)
        print(f"\n{len(scores)} families, mean oracle accuracy {mean:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
