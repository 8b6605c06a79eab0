"""Image synthesis: backgrounds, object sprites, and pose-to-pixel composition.

Everything here is a pure function of (inputs, seeds, config). Backgrounds
come from procedural generators or an asset pack; sprites come from shape
geometry, pack images, or a glyph fallback derived from the category name
alone. Compositing uses integer alpha arithmetic so output bytes do not
depend on floating-point library details.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from .assets import AssetLibrary, SHAPE_CATEGORIES
from .model import ConfigError, ObjectInstance

BACKGROUND_FALLBACKS = ("error", "procedural-clutter")
OBJECT_FALLBACKS = ("error", "procedural-glyph")

PNG_COMPRESS_LEVEL = 6

# Supersampling factor for antialiased geometry.
_AA_SCALE = 4


@dataclass(frozen=True)
class RenderConfig:
    width: int = 448
    height: int = 448
    sprite_fraction: float = 0.18   # sprite side as a fraction of min(W, H)
    antialias: bool = True
    background_fallback: str = "procedural-clutter"
    object_fallback: str = "procedural-glyph"

    def __post_init__(self) -> None:
        if self.width < 64 or self.height < 64:
            raise ConfigError(
                f"canvas must be at least 64x64, got {self.width}x{self.height}")
        if not (0 < self.sprite_fraction <= 0.5):
            raise ConfigError(
                f"sprite_fraction must lie in (0, 0.5], got {self.sprite_fraction}")
        if self.background_fallback not in BACKGROUND_FALLBACKS:
            raise ConfigError(
                f"background_fallback must be one of {BACKGROUND_FALLBACKS}")
        if self.object_fallback not in OBJECT_FALLBACKS:
            raise ConfigError(f"object_fallback must be one of {OBJECT_FALLBACKS}")

    @property
    def sprite_side(self) -> int:
        return max(1, round(self.sprite_fraction * min(self.width, self.height)))


def _rand_color(rng: np.random.Generator) -> tuple[int, int, int]:
    return tuple(int(c) for c in rng.integers(0, 256, size=3))


# --- procedural textures -------------------------------------------------

def _texture_stripes(rng, w, h):
    a, b = _rand_color(rng), _rand_color(rng)
    period = int(rng.integers(6, 33))
    orient = int(rng.integers(3))  # 0 horizontal, 1 vertical, 2 diagonal
    yy, xx = np.mgrid[0:h, 0:w]
    coord = {0: yy, 1: xx, 2: xx + yy}[orient]
    mask = (coord // period) % 2 == 0
    out = np.where(mask[..., None], np.array(a, np.uint8), np.array(b, np.uint8))
    return out.astype(np.uint8)


def _texture_checker(rng, w, h):
    a, b = _rand_color(rng), _rand_color(rng)
    cell = int(rng.integers(8, 41))
    yy, xx = np.mgrid[0:h, 0:w]
    mask = ((yy // cell) + (xx // cell)) % 2 == 0
    out = np.where(mask[..., None], np.array(a, np.uint8), np.array(b, np.uint8))
    return out.astype(np.uint8)


def _texture_value_noise(rng, w, h):
    a = np.array(_rand_color(rng), dtype=np.float64)
    b = np.array(_rand_color(rng), dtype=np.float64)
    grid = int(rng.integers(4, 13))
    field = rng.uniform(0.0, 1.0, size=(grid, grid))
    up = Image.fromarray((field * 255).astype(np.uint8), mode="L")
    up = up.resize((w, h), resample=Image.Resampling.BILINEAR)
    t = np.asarray(up, dtype=np.float64)[..., None] / 255.0
    return np.clip(a + t * (b - a), 0, 255).astype(np.uint8)


def _texture_gradient(rng, w, h):
    a = np.array(_rand_color(rng), dtype=np.float64)
    b = np.array(_rand_color(rng), dtype=np.float64)
    vertical = bool(rng.integers(2))
    ramp = np.linspace(0.0, 1.0, h if vertical else w)
    t = ramp[:, None] if vertical else ramp[None, :]
    t = np.broadcast_to(t, (h, w))[..., None]
    return np.clip(a + t * (b - a), 0, 255).astype(np.uint8)


_TEXTURE_GENERATORS = (
    ("stripes", _texture_stripes),
    ("checker", _texture_checker),
    ("value-noise", _texture_value_noise),
    ("gradient", _texture_gradient),
)


def render_texture(rng: np.random.Generator, width: int, height: int) -> tuple[str, np.ndarray]:
    """One seeded texture; returns (generator tag, HxWx3 uint8 array)."""
    idx = int(rng.integers(len(_TEXTURE_GENERATORS)))
    kind, fn = _TEXTURE_GENERATORS[idx]
    return kind, fn(rng, width, height)


# --- backgrounds ----------------------------------------------------------

def _clutter_background(rng, config: RenderConfig, dense: bool) -> Image.Image:
    """Procedural stand-in for photographic scenes: scattered filled shapes,
    sparse over a plain base or dense over a textured one."""
    w, h = config.width, config.height
    if dense:
        _, base = render_texture(rng, w, h)
        img = Image.fromarray(base)
        n_items = int(rng.integers(30, 61))
    else:
        gray = int(rng.integers(200, 246))
        img = Image.new("RGB", (w, h), (gray, gray, gray))
        n_items = int(rng.integers(5, 11))
    draw = ImageDraw.Draw(img)
    for _ in range(n_items):
        color = _rand_color(rng)
        cx = int(rng.integers(w))
        cy = int(rng.integers(h))
        half = int(rng.integers(8, max(9, min(w, h) // 6)))
        kind = int(rng.integers(3))
        box = (cx - half, cy - half, cx + half, cy + half)
        if kind == 0:
            draw.ellipse(box, fill=color)
        elif kind == 1:
            draw.rectangle(box, fill=color)
        else:
            draw.polygon([(cx, cy - half), (cx + half, cy + half),
                          (cx - half, cy + half)], fill=color)
    return img


def render_background(
    set_id: str,
    rng: np.random.Generator,
    config: RenderConfig = RenderConfig(),
    library: AssetLibrary = AssetLibrary(),
) -> Image.Image:
    """The shared per-bundle background as an RGB canvas."""
    w, h = config.width, config.height
    pack = library.background_pack(set_id)
    if pack is not None:
        images = pack.flat_images()
        path = images[int(rng.integers(len(images)))]
        with Image.open(path) as src:
            return src.convert("RGB").resize((w, h), Image.Resampling.LANCZOS)
    if set_id == "i1":
        return Image.new("RGB", (w, h), (255, 255, 255))
    if set_id == "i2":
        return Image.new("RGB", (w, h), _rand_color(rng))
    if set_id == "i3":
        _, tex = render_texture(rng, w, h)
        return Image.fromarray(tex)
    if set_id in ("i4", "i5"):
        if config.background_fallback == "error":
            raise ConfigError(
                f"background set {set_id!r} needs an asset pack and "
                "background_fallback is 'error'")
        return _clutter_background(rng, config, dense=(set_id == "i5"))
    raise ConfigError(
        f"background set {set_id!r} is not builtin and no asset pack "
        "with that id is registered")


# --- sprites --------------------------------------------------------------

def _shape_mask(category: str, side: int) -> Image.Image:
    """Grayscale coverage mask for one of the five builtin shapes."""
    mask = Image.new("L", (side, side), 0)
    draw = ImageDraw.Draw(mask)
    if category == "circle":
        draw.ellipse((0, 0, side - 1, side - 1), fill=255)
    elif category == "square":
        draw.rectangle((0, 0, side - 1, side - 1), fill=255)
    elif category == "rectangle":
        # 1.6:1 landscape box centered vertically.
        rh = max(1, round(side / 1.6))
        top = (side - rh) // 2
        draw.rectangle((0, top, side - 1, top + rh - 1), fill=255)
    elif category in ("triangle", "pentagon"):
        n = 3 if category == "triangle" else 5
        c = (side - 1) / 2
        r = (side - 1) / 2
        pts = [(c + r * np.sin(2 * np.pi * i / n),
                c - r * np.cos(2 * np.pi * i / n)) for i in range(n)]
        draw.polygon(pts, fill=255)
    else:
        raise ConfigError(f"unknown shape category {category!r}")
    return mask


_GLYPH_SHAPES = ("circle", "square", "rectangle", "triangle", "pentagon")


def _glyph_sprite(category: str, side: int, antialias: bool) -> Image.Image:
    """Deterministic fallback sprite: geometry, fill, and optional texture
    all derived from the category name, so one category always renders the
    same everywhere."""
    digest = hashlib.blake2b(category.encode("utf-8"), digest_size=16).digest()
    shape = _GLYPH_SHAPES[digest[0] % len(_GLYPH_SHAPES)]
    color = (digest[1], digest[2], digest[3])
    textured = digest[4] % 2 == 1
    scale = _AA_SCALE if antialias else 1
    big = side * scale
    mask = _shape_mask(shape, big)
    if textured:
        tex_rng = np.random.Generator(np.random.PCG64(
            int.from_bytes(digest[5:13], "little")))
        _, tex = render_texture(tex_rng, big, big)
        rgb = Image.fromarray(tex)
    else:
        rgb = Image.new("RGB", (big, big), color)
    sprite = rgb.convert("RGBA")
    sprite.putalpha(mask)
    if scale > 1:
        sprite = sprite.resize((side, side), Image.Resampling.LANCZOS)
    return sprite


def render_object(
    category: str,
    object_set: str,
    style_seed: int,
    config: RenderConfig = RenderConfig(),
    library: AssetLibrary = AssetLibrary(),
) -> Image.Image:
    """One RGBA sprite of side sprite_side (pack sprites keep aspect)."""
    side = config.sprite_side
    pack = library.object_pack(object_set)
    if pack is not None:
        images = pack.images_for(category)
        rng = np.random.Generator(np.random.PCG64(style_seed))
        path = images[int(rng.integers(len(images)))]
        with Image.open(path) as src:
            sprite = src.convert("RGBA")
        sprite.thumbnail((side, side), Image.Resampling.LANCZOS)
        return sprite

    if object_set in ("shape", "tshape"):
        if category not in SHAPE_CATEGORIES:
            raise ConfigError(
                f"category {category!r} is not a builtin shape")
        rng = np.random.Generator(np.random.PCG64(style_seed))
        scale = _AA_SCALE if config.antialias else 1
        big = side * scale
        mask = _shape_mask(category, big)
        if object_set == "shape":
            rgb = Image.new("RGB", (big, big), _rand_color(rng))
        else:
            _, tex = render_texture(rng, big, big)
            rgb = Image.fromarray(tex)
        sprite = rgb.convert("RGBA")
        sprite.putalpha(mask)
        if scale > 1:
            sprite = sprite.resize((side, side), Image.Resampling.LANCZOS)
        return sprite

    if config.object_fallback == "error":
        raise ConfigError(
            f"no asset pack registered for object set {object_set!r} and "
            "object_fallback is 'error'")
    return _glyph_sprite(category, side, config.antialias)


# --- composition ----------------------------------------------------------

def compose(
    background: Image.Image,
    objects: tuple[ObjectInstance, ...] | list[ObjectInstance],
    object_set: str,
    config: RenderConfig = RenderConfig(),
    library: AssetLibrary = AssetLibrary(),
) -> Image.Image:
    """Place sprites on a copy of the background, list order = draw order
    (the target comes first, so it sits lowest). Sprite centers land at
    (round(x * (W-1)), round(y * (H-1))); edge clipping is silent.

    Blending is exact integer alpha: out = (fg*a + bg*(255-a) + 127) // 255.
    """
    w, h = config.width, config.height
    canvas = np.asarray(background.convert("RGB"), dtype=np.uint32).copy()
    if canvas.shape[:2] != (h, w):
        raise ValueError(
            f"background is {canvas.shape[1]}x{canvas.shape[0]}, "
            f"config says {w}x{h}")
    for obj in objects:
        if len(obj.pose.coords) < 2:
            raise ValueError("rendering needs at least 2 pose coordinates")
        sprite = render_object(obj.category, object_set, obj.style_seed,
                               config, library)
        sw, sh = sprite.size
        cx = round(obj.pose.coords[0] * (w - 1))
        cy = round(obj.pose.coords[1] * (h - 1))
        left = cx - sw // 2
        top = cy - sh // 2
        # Visible overlap of the sprite with the canvas.
        x0, y0 = max(left, 0), max(top, 0)
        x1, y1 = min(left + sw, w), min(top + sh, h)
        if x0 >= x1 or y0 >= y1:
            continue
        arr = np.asarray(sprite, dtype=np.uint32)
        sub = arr[y0 - top:y1 - top, x0 - left:x1 - left]
        fg, alpha = sub[..., :3], sub[..., 3:4]
        bg = canvas[y0:y1, x0:x1]
        canvas[y0:y1, x0:x1] = (fg * alpha + bg * (255 - alpha) + 127) // 255
    return Image.fromarray(canvas.astype(np.uint8), mode="RGB")


def save_png(image: Image.Image, path) -> None:
    """Lossless write with fixed settings; PNG carries no timestamps, so
    identical pixels give identical bytes."""
    image.save(path, format="PNG", compress_level=PNG_COMPRESS_LEVEL)
