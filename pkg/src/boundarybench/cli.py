"""Command-line entry point.

Subcommands: generate, plan, validate, evaluate, compare. Exit codes are
part of the contract: 0 success, 1 runtime failure (I/O, coverage errors,
failed audits), 2 configuration/usage errors. Config values resolve as
CLI flag > config file > built-in default, and generation always requires
an explicit seed so no run is silently nondeterministic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .curriculum import (
    ABLATION_KINDS,
    CURRICULUM_STRATEGIES,
    plan_ablation,
    plan_curriculum,
    plan_to_json,
)
from .dataset import (
    SplitSpec,
    enumerate_paper_grid,
    generate_family,
    list_family_dirs,
    load_manifest,
)
from .evaluate import (
    FamilyScore,
    compare_runs,
    evaluation_report,
    load_predictions,
    load_truth,
    score_family,
)
from .model import ConfigError, parse_family_id
from .oracle import audit_dataset
from .prompts import QuestionTemplateSet
from .render import BACKGROUND_FALLBACKS, OBJECT_FALLBACKS, RenderConfig
from .sampling import DISTRACTOR_MODES, SamplerConfig

ASSET_ROOT_ENV = "BOUNDARYBENCH_ASSET_ROOT"


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    """Sampler/render/template knobs shared by generating subcommands.
    Defaults are None sentinels so a config file can fill the gaps."""
    sub.add_argument("--config", metavar="FILE",
                     help="JSON config file with sampler/render/templates/asset_packs sections")
    grp = sub.add_argument_group("sampler")
    grp.add_argument("--n-examples", type=int, default=None,
                     help="examples per bundle, demos plus query (default 5)")
    grp.add_argument("--epsilon", type=float, default=None,
                     help="pose margin around the threshold (default 0.05)")
    grp.add_argument("--d", type=int, default=None,
                     help="pose dimensionality (default 2)")
    grp.add_argument("--distractor-mode", choices=DISTRACTOR_MODES, default=None)
    grp.add_argument("--min-separation", type=float, default=None,
                     help="minimum normalized distance between objects (default 0)")
    grp = sub.add_argument_group("render")
    grp.add_argument("--canvas", default=None, metavar="WxH",
                     help="canvas size, e.g. 448x448")
    grp.add_argument("--sprite-fraction", type=float, default=None)
    grp.add_argument("--no-antialias", action="store_const", const=True,
                     default=None, dest="no_antialias")
    grp.add_argument("--background-fallback", choices=BACKGROUND_FALLBACKS,
                     default=None)
    grp.add_argument("--object-fallback", choices=OBJECT_FALLBACKS, default=None)
    sub.add_argument("--asset-pack", action="append", default=[],
                     metavar="ID=MANIFEST",
                     help=f"register an asset pack; relative paths resolve against ${ASSET_ROOT_ENV}")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    known = {"sampler", "render", "templates", "asset_packs"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    return raw


def _parse_canvas(spec: str) -> tuple[int, int]:
    try:
        w, h = spec.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"canvas must look like 448x448, got {spec!r}") from None


def _resolve_configs(args) -> tuple[SamplerConfig, RenderConfig, QuestionTemplateSet, dict]:
    file_cfg = _load_config_file(getattr(args, "config", None))

    sampler_kw = dict(file_cfg.get("sampler", {}))
    for flag, key in (("n_examples", "n_examples"), ("epsilon", "epsilon"),
                      ("d", "d"), ("distractor_mode", "distractor_mode"),
                      ("min_separation", "min_object_separation")):
        value = getattr(args, flag, None)
        if value is not None:
            sampler_kw[key] = value
    try:
        sampler = SamplerConfig(**sampler_kw)
    except TypeError as exc:
        raise ConfigError(f"bad sampler config: {exc}") from None

    render_kw = dict(file_cfg.get("render", {}))
    if getattr(args, "canvas", None) is not None:
        render_kw["width"], render_kw["height"] = _parse_canvas(args.canvas)
    if getattr(args, "sprite_fraction", None) is not None:
        render_kw["sprite_fraction"] = args.sprite_fraction
    if getattr(args, "no_antialias", None):
        render_kw["antialias"] = False
    for flag in ("background_fallback", "object_fallback"):
        value = getattr(args, flag, None)
        if value is not None:
            render_kw[flag] = value
    try:
        render_cfg = RenderConfig(**render_kw)
    except TypeError as exc:
        raise ConfigError(f"bad render config: {exc}") from None

    templates = QuestionTemplateSet.from_mapping(file_cfg.get("templates", {})) \
        if file_cfg.get("templates") else QuestionTemplateSet()

    packs = dict(file_cfg.get("asset_packs", {}))
    asset_root = os.environ.get(ASSET_ROOT_ENV, "")
    for item in getattr(args, "asset_pack", []):
        if "=" not in item:
            raise ConfigError(f"--asset-pack needs ID=MANIFEST, got {item!r}")
        pack_id, manifest = item.split("=", 1)
        packs[pack_id] = manifest
    resolved = {}
    for pack_id, manifest in packs.items():
        p = Path(manifest)
        if not p.is_absolute() and asset_root:
            p = Path(asset_root) / p
        resolved[pack_id] = str(p)
    return sampler, render_cfg, templates, resolved


def _parse_splits(spec: str) -> SplitSpec:
    try:
        train, val, test = (int(v) for v in spec.split(","))
    except ValueError:
        raise ConfigError(f"--splits must be train,val,test counts, got {spec!r}") from None
    return SplitSpec(train=train, val=val, test=test)


def _cmd_generate(args) -> int:
    if args.paper_grid == bool(args.family):
        raise ConfigError("pass either --family (repeatable) or --paper-grid")
    families = enumerate_paper_grid() if args.paper_grid \
        else [parse_family_id(f) for f in args.family]
    splits = _parse_splits(args.splits)
    sampler, render_cfg, templates, packs = _resolve_configs(args)
    for family in families:
        manifest = generate_family(
            family=family, splits=splits, master_seed=args.seed,
            out_root=args.out, sampler=sampler, render_cfg=render_cfg,
            templates=templates, asset_manifests=packs, workers=args.workers,
            write_images=not args.no_images)
        counts = " ".join(f"{s}={splits.count(s)}" for s in ("train", "val", "test"))
        print(f"{manifest.family_id}: {counts} -> {manifest.root}")
    print(f"generated {len(families)} families under {Path(args.out) / 'families'}")
    return 0


def _cmd_plan(args) -> int:
    target = parse_family_id(args.target)
    if args.strategy in CURRICULUM_STRATEGIES or args.strategy == "direct":
        plan = plan_curriculum(args.strategy, target,
                               epochs_per_stage=args.epochs or 3)
    elif args.strategy in ABLATION_KINDS:
        sampler, render_cfg, templates, packs = _resolve_configs(args)
        plan = plan_ablation(
            args.strategy, target, base_strategy=args.base_strategy,
            epochs=args.epochs, data_root=args.data_root,
            shuffle_seed=args.shuffle_seed, k=args.k, master_seed=args.seed,
            sampler=sampler, render_cfg=render_cfg, templates=templates,
            asset_manifests=packs, workers=args.workers,
            write_images=not args.no_images)
    else:
        raise ConfigError(f"unknown strategy {args.strategy!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(plan_to_json(plan), encoding="utf-8")
    stages = " -> ".join(
        f"{s.family.family_id}(x{s.epochs})" for s in plan.stages)
    print(f"{plan.strategy}: {stages}")
    print(f"plan written to {out}")
    return 0


def _select_manifests(dataset_root: str, family_filters: list[str]):
    dirs = list_family_dirs(dataset_root)
    manifests = [load_manifest(d) for d in dirs]
    if family_filters:
        wanted = {parse_family_id(f).family_id for f in family_filters}
        manifests = [m for m in manifests if m.family_id in wanted]
        found = {m.family_id for m in manifests}
        missing = wanted - found
        if missing:
            raise ConfigError(f"families not in dataset: {sorted(missing)}")
    if not manifests:
        raise ConfigError(f"no families found under {dataset_root}")
    return manifests


def _cmd_validate(args) -> int:
    manifests = _select_manifests(args.dataset, args.family)
    splits = tuple(args.split) if args.split else ("train", "val", "test")
    check_images = None
    if args.no_check_images:
        check_images = False
    documents = {}
    all_ok = True
    for manifest in manifests:
        report = audit_dataset(manifest, splits=splits, check_images=check_images)
        doc = report.to_document()
        documents[manifest.family_id] = doc
        status = "ok" if report.ok else "FAILED"
        print(f"{manifest.family_id}: {status} n={report.n} "
              f"solvable={report.solvable_rate} ambiguous={report.ambiguity_rate} "
              f"margin_min={report.margin_min} flags={len(report.flags)}")
        for entry in report.flags[:20]:
            print(f"  {entry['split']}:{entry['line']} "
                  f"{entry['bundle_id']}: {entry['problem']}")
        if len(report.flags) > 20:
            print(f"  ... {len(report.flags) - 20} more flags")
        all_ok = all_ok and report.ok
    if args.report:
        Path(args.report).write_text(
            json.dumps(documents, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.report}")
    return 0 if all_ok else 1


def _cmd_evaluate(args) -> int:
    manifests = _select_manifests(args.dataset, args.family)
    predictions = load_predictions(args.predictions)
    truths = {m.family_id: load_truth(m, args.split) for m in manifests}
    known = set()
    for truth in truths.values():
        known.update(truth)
    unknown = sorted({p.bundle_id for p in predictions} - known)
    if unknown:
        raise ValueError(
            f"predictions reference unknown bundle_ids: "
            f"{unknown[:10]}{' ...' if len(unknown) > 10 else ''}")
    scores = []
    for manifest in manifests:
        truth = truths[manifest.family_id]
        fam_preds = [p for p in predictions if p.bundle_id in truth]
        score = score_family(manifest.family_id, truth, fam_preds, alpha=args.alpha)
        scores.append(score)
        flag = "significant" if score.significant else "not significant"
        print(f"{score.family}: acc={score.accuracy:.4f} "
              f"compliance={score.compliance_rate:.4f} n={score.n} "
              f"threshold={score.z_threshold:.4f} ({flag}, "
              f"{len(score.missing)} missing)")
    doc = evaluation_report(scores, alpha=args.alpha)
    agg = doc["aggregate"]
    print(f"mean accuracy {agg['mean_accuracy']:.4f} over {agg['n_families']} "
          f"families, {agg['n_significant']} significant")
    if args.report:
        Path(args.report).write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.report}")
    return 0


def _scores_from_report(path: str) -> list[FamilyScore]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return [
            FamilyScore(
                family=f["family"], n=f["n"], n_correct=f["n_correct"],
                n_compliant=f["n_compliant"], alpha=f["alpha"],
                missing=tuple(f.get("missing", ())))
            for f in raw["families"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path} is not an evaluation report: {exc}") from None


def _cmd_compare(args) -> int:
    if len(args.reports) < 2:
        raise ConfigError("compare needs at least two report files")
    labels = args.labels.split(",") if args.labels else \
        [Path(p).stem for p in args.reports]
    if len(labels) != len(args.reports):
        raise ConfigError(
            f"{len(labels)} labels for {len(args.reports)} reports")
    runs = [(label, _scores_from_report(path))
            for label, path in zip(labels, args.reports)]
    comparison = compare_runs(runs)
    sys.stdout.write(comparison.render_text())
    if args.out:
        Path(args.out).write_text(
            json.dumps(comparison.to_document(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
        print(f"comparison written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundarybench",
        description="Generate, validate, and score hidden-boundary visual "
                    "in-context-learning benchmarks.")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="materialize task families to disk")
    gen.add_argument("--seed", type=int, required=True,
                     help="master seed; required, there is no implicit default")
    gen.add_argument("--out", required=True, help="dataset output root")
    gen.add_argument("--family", action="append", default=[],
                     help="family id like bg-i5_obj-hard_m3_text-guide (repeatable)")
    gen.add_argument("--paper-grid", action="store_true",
                     help="generate the full 50-family benchmark grid")
    gen.add_argument("--splits", default="1000,200,1000",
                     help="train,val,test bundle counts (default 1000,200,1000)")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--no-images", action="store_true",
                     help="write manifests only, skip PNG rendering")
    _add_config_flags(gen)
    gen.set_defaults(func=_cmd_generate)

    plan = subs.add_parser("plan", help="emit curriculum or ablation plans")
    plan.add_argument("--strategy", required=True,
                      choices=CURRICULUM_STRATEGIES + ("direct",) + ABLATION_KINDS)
    plan.add_argument("--target", required=True, help="target family id")
    plan.add_argument("--out", required=True, help="plan JSON path")
    plan.add_argument("--epochs", type=int, default=None,
                      help="epochs per stage (default 3; more-epochs 6; more-data 1)")
    plan.add_argument("--base-strategy", default="all",
                      choices=CURRICULUM_STRATEGIES,
                      help="curriculum whose stages the mix ablation merges")
    plan.add_argument("--data-root", default=None,
                      help="dataset root (required for mix and more-data)")
    plan.add_argument("--shuffle-seed", type=int, default=0,
                      help="declared shuffle seed for the mix ablation")
    plan.add_argument("--k", type=int, default=6000,
                      help="unique training bundles for more-data")
    plan.add_argument("--seed", type=int, default=None,
                      help="master seed for more-data generation")
    plan.add_argument("--workers", type=int, default=1)
    plan.add_argument("--no-images", action="store_true")
    _add_config_flags(plan)
    plan.set_defaults(func=_cmd_plan)

    val = subs.add_parser("validate", help="audit generated datasets")
    val.add_argument("dataset", help="dataset root (contains families/)")
    val.add_argument("--family", action="append", default=[])
    val.add_argument("--split", action="append", default=[],
                     choices=("train", "val", "test"))
    val.add_argument("--no-check-images", action="store_true")
    val.add_argument("--report", default=None, help="write JSON report here")
    val.set_defaults(func=_cmd_validate)

    ev = subs.add_parser("evaluate", help="score a predictions file")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--split", default="test")
    ev.add_argument("--family", action="append", default=[])
    ev.add_argument("--alpha", type=float, default=0.05)
    ev.add_argument("--report", default=None)
    ev.set_defaults(func=_cmd_evaluate)

    cmp_ = subs.add_parser("compare", help="compare evaluation reports")
    cmp_.add_argument("reports", nargs="+", help="evaluation report JSON files")
    cmp_.add_argument("--labels", default=None,
                      help="comma-separated run labels (default: file stems)")
    cmp_.add_argument("--out", default=None, help="write comparison JSON here")
    cmp_.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
