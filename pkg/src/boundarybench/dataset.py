"""Dataset materialization and manifest I/O.

On-disk layout per family:

    <out_root>/families/<family_id>/
        family.json              config snapshot, written last
        <split>/bundles.jsonl    one record per bundle, ascending index
        <split>/images/*.png     five images per bundle

family.json captures everything needed to regenerate the family byte-for-byte:
the family parameters, master seed, split sizes, sampler/render/template
configs, and asset-pack manifest paths. Splits draw bundle indices from
disjoint ranges (train from 0, val from 10^6, test from 2*10^6) so their RNG
streams never collide; that spacing caps any split at a million bundles.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .assets import AssetLibrary, library_from_manifests
from .model import (
    BUILTIN_BACKGROUNDS,
    BUILTIN_OBJECT_SETS,
    ConfigError,
    PromptBundle,
    TaskFamilyParams,
    family_id,
)
from .prompts import QuestionTemplateSet
from .render import RenderConfig, compose, render_background, save_png
from .sampling import SamplerConfig, generate_bundle

FORMAT_VERSION = 1

SPLIT_NAMES = ("train", "val", "test")
SPLIT_OFFSETS = {"train": 0, "val": 10**6, "test": 2 * 10**6}
_MAX_SPLIT = 10**6


@dataclass(frozen=True)
class SplitSpec:
    train: int = 1000
    val: int = 200
    test: int = 1000

    def __post_init__(self) -> None:
        for name in SPLIT_NAMES:
            count = getattr(self, name)
            if count < 0:
                raise ConfigError(f"split {name!r} count must be >= 0, got {count}")
            if count > _MAX_SPLIT:
                raise ConfigError(
                    f"split {name!r} count {count} exceeds the {_MAX_SPLIT} cap "
                    "imposed by the index-offset scheme")
        if self.train + self.val + self.test == 0:
            raise ConfigError("at least one split must be non-empty")

    def count(self, split: str) -> int:
        if split not in SPLIT_NAMES:
            raise ConfigError(f"unknown split {split!r}, expected one of {SPLIT_NAMES}")
        return getattr(self, split)


@dataclass(frozen=True)
class DatasetManifest:
    """In-memory view of one family's family.json plus its location."""

    family: TaskFamilyParams
    master_seed: int
    splits: SplitSpec
    sampler: SamplerConfig
    render: RenderConfig
    templates: QuestionTemplateSet
    asset_manifests: dict[str, str]
    images_written: bool
    root: Path  # .../families/<family_id>

    @property
    def family_id(self) -> str:
        return family_id(self.family)

    def split_dir(self, split: str) -> Path:
        return self.root / split

    def bundles_path(self, split: str) -> Path:
        return self.root / split / "bundles.jsonl"

    def library(self) -> AssetLibrary:
        return library_from_manifests(self.asset_manifests)

    def to_snapshot(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "family": self.family_id,
            "family_params": asdict(self.family),
            "master_seed": self.master_seed,
            "splits": {s: self.splits.count(s) for s in SPLIT_NAMES},
            "split_offsets": dict(SPLIT_OFFSETS),
            "sampler": asdict(self.sampler),
            "render": asdict(self.render),
            "templates": asdict(self.templates),
            "asset_packs": dict(self.asset_manifests),
            "images_written": self.images_written,
        }


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, compact separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def bundle_to_record(bundle: PromptBundle) -> dict:
    def example(rec):
        return {
            "image": rec.image_ref,
            "label": rec.label,
            "objects": [
                {
                    "category": o.category,
                    "xi": list(o.pose.coords),
                    "is_target": o.is_target,
                }
                for o in rec.objects
            ],
        }

    return {
        "bundle_id": bundle.bundle_id,
        "family": family_id(bundle.family),
        "seed": {
            "master_seed": bundle.master_seed,
            "bundle_index": bundle.bundle_index,
            "background_seed": bundle.background_seed,
        },
        "boundary": {
            "dim": bundle.boundary.dim,
            "tau": bundle.boundary.tau,
            "sign": bundle.boundary.sign,
            "epsilon": bundle.boundary.epsilon,
        },
        "question": bundle.question,
        "prompt_text": bundle.prompt_text,
        "demos": [example(d) for d in bundle.demos],
        "query": example(bundle.query),
    }


def _render_bundle_images(bundle: PromptBundle, split_dir: Path,
                          render_cfg: RenderConfig, library: AssetLibrary) -> None:
    bg_rng = np.random.Generator(np.random.PCG64(bundle.background_seed))
    background = render_background(bundle.family.background_set, bg_rng,
                                   render_cfg, library)
    for rec in bundle.examples:
        img = compose(background, rec.objects, bundle.family.object_set,
                      render_cfg, library)
        save_png(img, split_dir / rec.image_ref)


def generate_family(
    family: TaskFamilyParams,
    splits: SplitSpec,
    master_seed: int,
    out_root: str | Path,
    sampler: SamplerConfig = SamplerConfig(),
    render_cfg: RenderConfig = RenderConfig(),
    templates: QuestionTemplateSet = QuestionTemplateSet(),
    asset_manifests: dict[str, str] | None = None,
    workers: int = 1,
    write_images: bool = True,
) -> DatasetManifest:
    """Materialize one family. Returns its manifest; family.json is written
    last so a present manifest marks a complete directory.

    Output bytes are a pure function of the arguments: bundles are sampled
    from per-index RNG streams and the manifest is assembled in index order,
    so worker count never shows up in the result.
    """
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    asset_manifests = dict(asset_manifests or {})
    library = library_from_manifests(asset_manifests)
    fid = family_id(family)
    root = Path(out_root) / "families" / fid
    manifest = DatasetManifest(
        family=family, master_seed=master_seed, splits=splits,
        sampler=sampler, render=render_cfg, templates=templates,
        asset_manifests=asset_manifests, images_written=write_images,
        root=root)

    def build_one(index: int, split_dir: Path) -> tuple[int, str]:
        bundle = generate_bundle(family, sampler, master_seed, index,
                                 library, templates)
        if write_images:
            _render_bundle_images(bundle, split_dir, render_cfg, library)
        return index, canonical_json(bundle_to_record(bundle))

    for split in SPLIT_NAMES:
        count = splits.count(split)
        if count == 0:
            continue
        split_dir = root / split
        if write_images:
            (split_dir / "images").mkdir(parents=True, exist_ok=True)
        else:
            split_dir.mkdir(parents=True, exist_ok=True)
        offset = SPLIT_OFFSETS[split]
        indices = range(offset, offset + count)
        if workers == 1:
            lines = [build_one(i, split_dir) for i in indices]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                lines = list(pool.map(lambda i: build_one(i, split_dir), indices))
        lines.sort(key=lambda pair: pair[0])
        with open(split_dir / "bundles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for _, line in lines:
                fh.write(line + "\n")

    with open(root / "family.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest.to_snapshot(), sort_keys=True, indent=2,
                            ensure_ascii=False) + "\n")
    return manifest


def load_manifest(family_dir: str | Path) -> DatasetManifest:
    """Read a family.json back into a manifest; errors name the bad field."""
    root = Path(family_dir)
    path = root / "family.json"
    if not path.is_file():
        raise ConfigError(f"no family.json under {root}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(
            f"{path}: format_version {version!r} unsupported (expected {FORMAT_VERSION})")
    try:
        family = TaskFamilyParams(**raw["family_params"])
        splits = SplitSpec(**raw["splits"])
        sampler = SamplerConfig(**raw["sampler"])
        render_cfg = RenderConfig(**raw["render"])
        templates = QuestionTemplateSet(**{
            k: tuple(v) for k, v in raw["templates"].items()})
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed config snapshot: {exc}") from None
    return DatasetManifest(
        family=family, master_seed=raw["master_seed"], splits=splits,
        sampler=sampler, render=render_cfg, templates=templates,
        asset_manifests=dict(raw.get("asset_packs", {})),
        images_written=bool(raw.get("images_written", True)),
        root=root)


def regenerate_family(manifest: DatasetManifest, out_root: str | Path,
                      workers: int = 1) -> DatasetManifest:
    """Re-run generation from a manifest's snapshot into a (possibly
    different) dataset root; byte-identical to the original generation."""
    return generate_family(
        family=manifest.family, splits=manifest.splits,
        master_seed=manifest.master_seed, out_root=out_root,
        sampler=manifest.sampler, render_cfg=manifest.render,
        templates=manifest.templates, asset_manifests=manifest.asset_manifests,
        workers=workers, write_images=manifest.images_written)


def iter_records(manifest: DatasetManifest, split: str):
    """Yield (line_number, raw dict) for one split's bundle records."""
    path = manifest.bundles_path(split)
    if not path.is_file():
        return
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                yield line_no, json.loads(line)


def list_family_dirs(dataset_root: str | Path) -> list[Path]:
    """All family directories under a dataset root, sorted by id."""
    base = Path(dataset_root) / "families"
    if not base.is_dir():
        raise ConfigError(f"{dataset_root} has no families/ directory")
    return sorted(p for p in base.iterdir() if (p / "family.json").is_file())


def enumerate_paper_grid() -> list[TaskFamilyParams]:
    """The benchmark's 5 x 5 x 2 = 50 task families: every background and
    object set, crossed with (m=1, text none) and (m=3, text guide)."""
    grid = []
    for bg in BUILTIN_BACKGROUNDS:
        for obj in BUILTIN_OBJECT_SETS:
            for m, text_mode in ((1, "none"), (3, "guide")):
                grid.append(TaskFamilyParams(
                    background_set=bg, object_set=obj, m=m, text_mode=text_mode))
    return grid
