"""Curriculum and ablation plan construction.

A plan is data, not a training run: an ordered list of stages, each naming a
task family, the dataset directory to train on, an epoch count, and whether
to initialize from the previous stage. External trainers consume the JSON
document; this module never invokes one.

Two-stage strategies simplify exactly one axis for stage 1 while holding the
rest of the target family fixed: "bg" lowers the background to level i1,
"obj" swaps the object set to "easy", "m" drops distractors (m=1), and "all"
does all three at once. "direct" is the single-stage baseline. Ablations:
"mix" merges the stage training sets into one shuffled dataset, "more-epochs"
trains the target alone for twice the steps, and "more-data" regenerates the
target with a larger unique training set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import (
    FORMAT_VERSION,
    SplitSpec,
    canonical_json,
    generate_family,
)
from .model import ConfigError, TaskFamilyParams, family_id, parse_family_id
from .prompts import QuestionTemplateSet
from .render import RenderConfig
from .sampling import SamplerConfig

CURRICULUM_STRATEGIES = ("bg", "obj", "m", "all")
ABLATION_KINDS = ("mix", "more-epochs", "more-data")
PLAN_STRATEGIES = CURRICULUM_STRATEGIES + ("direct",) + ABLATION_KINDS

DEFAULT_EPOCHS = 3


class DegeneratePlanError(ConfigError):
    """Stage 1 would equal the target; the curriculum has nothing to teach."""


@dataclass(frozen=True)
class CurriculumStage:
    family: TaskFamilyParams
    dataset: str            # dataset path, relative to the plan's data root
    epochs: int
    init_from: str          # "fresh" | "previous"

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.init_from not in ("fresh", "previous"):
            raise ConfigError(f"init_from must be 'fresh' or 'previous', got {self.init_from!r}")


@dataclass(frozen=True)
class CurriculumPlan:
    strategy: str
    target: TaskFamilyParams
    stages: tuple[CurriculumStage, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.strategy not in PLAN_STRATEGIES:
            raise ConfigError(
                f"strategy must be one of {PLAN_STRATEGIES}, got {self.strategy!r}")
        if not self.stages:
            raise ConfigError("a plan needs at least one stage")
        if self.stages[-1].family != self.target:
            raise ConfigError("the final stage must train the declared target")


def _family_dataset(family: TaskFamilyParams) -> str:
    return f"families/{family_id(family)}"


def stage_one_family(strategy: str, target: TaskFamilyParams) -> TaskFamilyParams:
    """The simplified family a two-stage strategy starts from."""
    if strategy == "bg":
        return replace(target, background_set="i1")
    if strategy == "obj":
        return replace(target, object_set="easy")
    if strategy == "m":
        return replace(target, m=1)
    if strategy == "all":
        return replace(target, background_set="i1", object_set="easy", m=1)
    raise ConfigError(f"unknown curriculum strategy {strategy!r}")


def plan_curriculum(
    strategy: str,
    target: TaskFamilyParams,
    epochs_per_stage: int = DEFAULT_EPOCHS,
    metadata: dict | None = None,
) -> CurriculumPlan:
    """Two-stage plan per the strategy (or single-stage for "direct")."""
    if strategy == "direct":
        stages = (CurriculumStage(target, _family_dataset(target),
                                  epochs_per_stage, "fresh"),)
        return CurriculumPlan(strategy, target, stages, dict(metadata or {}))
    if strategy not in CURRICULUM_STRATEGIES:
        raise ConfigError(
            f"curriculum strategy must be one of {CURRICULUM_STRATEGIES + ('direct',)}, "
            f"got {strategy!r}")
    first = stage_one_family(strategy, target)
    if first == target:
        raise DegeneratePlanError(
            f"strategy {strategy!r} does not simplify target {family_id(target)}; "
            "stage 1 would retrain the target itself")
    stages = (
        CurriculumStage(first, _family_dataset(first), epochs_per_stage, "fresh"),
        CurriculumStage(target, _family_dataset(target), epochs_per_stage, "previous"),
    )
    return CurriculumPlan(strategy, target, stages, dict(metadata or {}))


def _merge_stage_train_sets(
    plan: CurriculumPlan,
    data_root: Path,
    out_root: Path,
    shuffle_seed: int,
) -> tuple[str, int]:
    """Write the shuffled union of the plan's stage train sets.

    Records keep their bundle_ids; image references are rewritten relative
    to the merged split directory so no pixel data is copied. Returns the
    merged dataset path (relative to out_root) and its record count.
    """
    rel_name = f"ablations/mix-{plan.strategy}-{family_id(plan.target)}"
    merged_split = out_root / rel_name / "train"
    merged_split.mkdir(parents=True, exist_ok=True)
    records: list[str] = []
    for stage in plan.stages:
        src = data_root / stage.dataset / "train" / "bundles.jsonl"
        if not src.is_file():
            raise ConfigError(
                f"mix needs the stage dataset {src}; generate it first")
        src_split = src.parent
        with open(src, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                for example in rec["demos"] + [rec["query"]]:
                    example["image"] = os.path.relpath(
                        src_split / example["image"], merged_split)
                records.append(canonical_json(rec))
    order = np.random.Generator(np.random.PCG64(shuffle_seed)).permutation(len(records))
    with open(merged_split / "bundles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for idx in order:
            fh.write(records[int(idx)] + "\n")
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": "mixed-train-set",
        "sources": [stage.dataset for stage in plan.stages],
        "shuffle_seed": shuffle_seed,
        "n_records": len(records),
    }
    with open(out_root / rel_name / "mix.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return rel_name, len(records)


def plan_ablation(
    kind: str,
    target: TaskFamilyParams,
    base_strategy: str = "all",
    epochs: int | None = None,
    data_root: str | Path | None = None,
    shuffle_seed: int = 0,
    k: int = 6000,
    master_seed: int | None = None,
    sampler: SamplerConfig = SamplerConfig(),
    render_cfg: RenderConfig = RenderConfig(),
    templates: QuestionTemplateSet = QuestionTemplateSet(),
    asset_manifests: dict[str, str] | None = None,
    workers: int = 1,
    write_images: bool = True,
) -> CurriculumPlan:
    """Build one of the three control conditions.

    mix: requires data_root with the base strategy's stage train sets already
    generated; writes the merged dataset under data_root/ablations/.
    more-epochs: plain finetuning with doubled epochs (6 by default).
    more-data: generates a fresh train split of k unique bundles under
    data_root (master_seed required).
    """
    if kind == "more-epochs":
        stages = (CurriculumStage(target, _family_dataset(target),
                                  epochs or 2 * DEFAULT_EPOCHS, "fresh"),)
        return CurriculumPlan("more-epochs", target, stages)

    if kind == "mix":
        if data_root is None:
            raise ConfigError("mix needs data_root pointing at the generated stages")
        base = plan_curriculum(base_strategy, target)
        root = Path(data_root)
        rel_name, n_records = _merge_stage_train_sets(base, root, root, shuffle_seed)
        stages = (CurriculumStage(target, rel_name, epochs or DEFAULT_EPOCHS, "fresh"),)
        return CurriculumPlan("mix", target, stages, {
            "base_strategy": base_strategy,
            "shuffle_seed": shuffle_seed,
            "n_records": n_records,
        })

    if kind == "more-data":
        if data_root is None or master_seed is None:
            raise ConfigError("more-data needs data_root and master_seed")
        out_root = Path(data_root) / f"ablations/more-data-k{k}"
        generate_family(
            family=target, splits=SplitSpec(train=k, val=0, test=0),
            master_seed=master_seed, out_root=out_root, sampler=sampler,
            render_cfg=render_cfg, templates=templates,
            asset_manifests=asset_manifests, workers=workers,
            write_images=write_images)
        dataset = f"ablations/more-data-k{k}/{_family_dataset(target)}"
        stages = (CurriculumStage(target, dataset, epochs or 1, "fresh"),)
        return CurriculumPlan("more-data", target, stages, {"k": k})

    raise ConfigError(f"ablation kind must be one of {ABLATION_KINDS}, got {kind!r}")


def plan_to_json(plan: CurriculumPlan) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "strategy": plan.strategy,
        "target": family_id(plan.target),
        "stages": [
            {
                "family": family_id(s.family),
                "dataset": s.dataset,
                "epochs": s.epochs,
                "init_from": s.init_from,
            }
            for s in plan.stages
        ],
        "metadata": plan.metadata,
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def plan_from_json(text: str) -> CurriculumPlan:
    raw = json.loads(text)
    if raw.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported plan format_version {raw.get('format_version')!r}")
    stages = tuple(
        CurriculumStage(
            family=parse_family_id(s["family"]),
            dataset=s["dataset"],
            epochs=s["epochs"],
            init_from=s["init_from"],
        )
        for s in raw["stages"]
    )
    return CurriculumPlan(
        strategy=raw["strategy"],
        target=parse_family_id(raw["target"]),
        stages=stages,
        metadata=dict(raw.get("metadata", {})),
    )
