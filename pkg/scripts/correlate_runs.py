"""Correlate per-family accuracies between two evaluation reports.

Reads two report JSONs produced by `boundarybench evaluate --report` (or by
compare_runs) and computes the Pearson correlation over the families they
share. Typical use: does accuracy after stage 1 predict accuracy after the
full curriculum?

    python3 scripts/correlate_runs.py stage1.json final.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from boundarybench import correlate_stage_accuracies


def family_accuracies(report_path: Path) -> dict[str, float]:
    doc = json.loads(report_path.read_text())
    return {row["family"]: row["accuracy"] for row in doc["families"]}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("report_a", type=Path)
    ap.add_argument("report_b", type=Path)
    ap.add_argument("--min-families", type=int, default=3)
    args = ap.parse_args()

    a = family_accuracies(args.report_a)
    b = family_accuracies(args.report_b)
    shared = sorted(set(a) & set(b))
    if len(shared) < args.min_families:
        print(f"only {len(shared)} shared families, need at least "
              f"{args.min_families}")
        return 1

    pairs = [(a[f], b[f]) for f in shared]
    result = correlate_stage_accuracies(pairs)
    print(f"{len(shared)} shared families")
    print(f"pearson r  = {result['pearson_r']:+.4f}")
    print(f"r squared  = {result['r_squared']:.4f}")

    worst = sorted(shared, key=lambda f: b[f] - a[f])[:3]
    print("\nlargest drops (a -> b):")
    for fam in worst:
        print(f"  {fam:42s} {a[fam]:.3f} -> {b[fam]:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
