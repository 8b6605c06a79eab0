"""Object-category vocabularies and on-disk asset packs.

The five builtin object sets ship with category names only; sprites come
from an asset pack when one is registered under the set's id, otherwise the
renderer falls back to procedural glyphs. Background photo sets (i4, i5)
resolve the same way. A pack is a JSON manifest mapping category names to
image files; packs are validated eagerly so a bad path fails at load time,
not mid-generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .model import BUILTIN_OBJECT_SETS, ConfigError

EASY_CATEGORIES = ("bolt", "chain", "hardhat", "pickup truck", "tree")

SHAPE_CATEGORIES = ("circle", "pentagon", "rectangle", "square", "triangle")

TOOL_CATEGORIES = (
    "hammer", "saw", "carpet knife", "drill", "heat gun",
    "screwdriver", "wrench", "pliers", "tape measure", "level",
    "chisel", "file", "clamp", "vise", "soldering iron",
    "wire stripper", "crimping tool", "allen key", "socket wrench",
    "torque wrench", "pipe wrench", "adjustable wrench", "ratchet",
    "utility knife", "box cutter", "hacksaw", "jigsaw", "circular saw",
    "miter saw", "band saw", "table saw", "reciprocating saw",
    "angle grinder", "bench grinder", "belt sander", "orbital sander",
    "router", "planer", "lathe", "milling cutter", "drill press",
    "impact driver", "impact wrench", "nail gun", "staple gun",
    "rivet gun", "glue gun", "caulking gun", "spray gun",
    "air compressor", "welding torch", "plasma cutter", "bolt cutter",
    "wire cutter", "tin snips", "pry bar", "crowbar", "mallet",
    "sledgehammer", "axe", "hatchet", "machete", "trowel",
    "putty knife", "paint roller", "paintbrush", "ladder", "sawhorse",
    "workbench", "toolbox", "stud finder", "caliper", "micrometer",
    "try square", "laser level", "plumb bob", "chalk line",
    "multimeter", "voltage tester", "inspection mirror",
    "magnifying glass", "work light", "extension cord", "shop vacuum",
    "grease gun", "oil can", "funnel",
)

# The broad catalogue uses title-case plural display names ("Heat Guns");
# 20 standalone names plus an 11 x 28 qualifier/noun grid gives 328.
_HARD_BARE = (
    "Anvils", "Bearings", "Bellows", "Brackets", "Chisels",
    "Crowbars", "Dollies", "Fasteners", "Files", "Funnels",
    "Gears", "Ladders", "Mallets", "Pliers", "Pulleys",
    "Rasps", "Rivets", "Sockets", "Springs", "Trowels",
)
_HARD_QUALIFIERS = (
    "Heat", "Impact", "Cordless", "Pneumatic", "Hydraulic",
    "Electric", "Magnetic", "Rotary", "Precision", "Industrial",
    "Digital",
)
_HARD_NOUNS = (
    "Guns", "Drills", "Saws", "Hammers", "Wrenches", "Sanders",
    "Grinders", "Cutters", "Clamps", "Presses", "Pumps", "Jacks",
    "Hoists", "Winches", "Torches", "Gauges", "Brushes", "Blowers",
    "Mixers", "Sprayers", "Staplers", "Riveters", "Shears",
    "Punches", "Reamers", "Levels", "Vises", "Chargers",
)
HARD_CATEGORIES = _HARD_BARE + tuple(
    f"{q} {n}" for q in _HARD_QUALIFIERS for n in _HARD_NOUNS)

BUILTIN_CATEGORIES: dict[str, tuple[str, ...]] = {
    "easy": EASY_CATEGORIES,
    "shape": SHAPE_CATEGORIES,
    "tshape": SHAPE_CATEGORIES,
    "tool": TOOL_CATEGORIES,
    "hard": HARD_CATEGORIES,
}


@dataclass(frozen=True)
class AssetPack:
    """A validated on-disk image collection keyed by category name."""

    name: str
    root: Path
    categories: dict[str, tuple[Path, ...]]

    @property
    def category_names(self) -> tuple[str, ...]:
        return tuple(self.categories)

    def images_for(self, category: str) -> tuple[Path, ...]:
        try:
            return self.categories[category]
        except KeyError:
            raise ConfigError(
                f"pack {self.name!r} has no category {category!r}") from None

    def flat_images(self) -> tuple[Path, ...]:
        """All images in manifest order, for category-free sampling."""
        return tuple(p for paths in self.categories.values() for p in paths)


def load_asset_pack(manifest_path: str | Path) -> AssetPack:
    """Load and validate a pack manifest.

    Manifest schema: {"name": str, "categories": {name: [relative paths]}}.
    Every referenced file must exist and decode; failures name the pack and
    the offending entry.
    """
    path = Path(manifest_path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"asset pack manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"asset pack manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict) or "name" not in raw or "categories" not in raw:
        raise ConfigError(
            f"asset pack manifest {path} must be an object with 'name' and 'categories'")
    unknown = sorted(set(raw) - {"name", "categories"})
    if unknown:
        raise ConfigError(f"asset pack manifest {path}: unknown keys {unknown}")
    if not raw["categories"]:
        raise ConfigError(f"asset pack manifest {path} lists no categories")
    name = raw["name"]
    root = path.parent
    categories: dict[str, tuple[Path, ...]] = {}
    for cat, rel_paths in raw["categories"].items():
        if not cat:
            raise ConfigError(f"pack {name!r}: empty category name")
        if not rel_paths:
            raise ConfigError(f"pack {name!r}: category {cat!r} lists no images")
        resolved = []
        for rel in rel_paths:
            img_path = root / rel
            if not img_path.is_file():
                raise ConfigError(
                    f"pack {name!r}: missing image {rel!r} (category {cat!r})")
            try:
                with Image.open(img_path) as img:
                    img.verify()
            except Exception as exc:
                raise ConfigError(
                    f"pack {name!r}: image {rel!r} failed to decode: {exc}") from None
            resolved.append(img_path)
        categories[cat] = tuple(resolved)
    return AssetPack(name=name, root=root, categories=categories)


@dataclass(frozen=True)
class AssetLibrary:
    """Registered packs plus builtin vocabularies; the renderer's lookup."""

    packs: dict[str, AssetPack] = field(default_factory=dict)

    def categories_for(self, object_set: str) -> tuple[str, ...]:
        """Category vocabulary for an object set; a registered pack wins
        over the builtin list, and custom sets require a pack."""
        pack = self.packs.get(object_set)
        if pack is not None:
            return pack.category_names
        if object_set in BUILTIN_OBJECT_SETS:
            return BUILTIN_CATEGORIES[object_set]
        raise ConfigError(
            f"object set {object_set!r} is not builtin and no asset pack "
            "with that id is registered")

    def object_pack(self, object_set: str) -> AssetPack | None:
        return self.packs.get(object_set)

    def background_pack(self, background_set: str) -> AssetPack | None:
        return self.packs.get(background_set)


def library_from_manifests(manifests: dict[str, str | Path]) -> AssetLibrary:
    """Build a library from {pack id: manifest path}; ids must match the
    manifest's own name field."""
    packs: dict[str, AssetPack] = {}
    for pack_id, manifest in manifests.items():
        pack = load_asset_pack(manifest)
        if pack.name != pack_id:
            raise ConfigError(
                f"pack id {pack_id!r} does not match manifest name {pack.name!r} "
                f"({manifest})")
        packs[pack_id] = pack
    return AssetLibrary(packs=packs)
