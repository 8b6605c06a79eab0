"""Bundle sampling: hidden boundaries, balanced labels, and margin-constrained
pose placement.

Randomness discipline: every bundle owns one RNG stream derived from
(master_seed, family id, bundle index) through a splitmix64 chain, and all
draws for that bundle happen in a fixed documented order. That makes bundle
generation a pure function of its arguments, independent of worker count or
generation order.

Per-bundle draw order:
  1. boundary (dimension, threshold, direction)
  2. background seed
  3. target class
  4. question (template, subject when mode is "none", description phrase)
  5. query label, then the demo-label shuffle
  6. for each example: example seed, then for each object: pose rejection
     loop, class (target first, distractors resampled until distinct)

Object style seeds are not stream draws; they derive from the example seed
(splitmix64 of seed XOR object index) so a single example re-renders without
replaying the bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assets import AssetLibrary
from .model import (
    ConfigError,
    DecisionBoundary,
    ExampleRecord,
    ObjectInstance,
    Pose,
    PromptBundle,
    TaskFamilyParams,
    classify,
    family_id,
    margin,
)
from .prompts import QuestionTemplateSet, build_prompt_text, build_question

_MASK64 = (1 << 64) - 1

DISTRACTOR_MODES = ("algorithm-faithful", "unconstrained")


class PoseSamplingError(RuntimeError):
    """Rejection loop exhausted its iteration cap; indicates a broken
    boundary/config combination, unreachable for validated inputs."""


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs of the generation algorithm.

    distractor_mode "algorithm-faithful" constrains every object's pose to
    the example label with the same margin as the target (the literal inner
    loop of the generation algorithm); "unconstrained" places distractors
    uniformly with no relation to the boundary.
    """

    n_examples: int = 5          # N, including the query
    epsilon: float = 0.05        # margin keeping poses off the boundary
    d: int = 2                   # pose dimensionality
    distractor_mode: str = "algorithm-faithful"
    min_object_separation: float = 0.0   # normalized distance, 0 disables
    max_pose_iters: int = 10_000

    def __post_init__(self) -> None:
        if self.n_examples < 3:
            raise ConfigError(f"n_examples must be >= 3, got {self.n_examples}")
        if (self.n_examples - 1) % 2 != 0:
            raise ConfigError(
                f"n_examples={self.n_examples} leaves an odd demo count; "
                "exact label balance needs an even number of demos")
        if not (0 < self.epsilon < 0.25):
            raise ConfigError(f"epsilon must lie in (0, 0.25), got {self.epsilon}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.distractor_mode not in DISTRACTOR_MODES:
            raise ConfigError(
                f"distractor_mode must be one of {DISTRACTOR_MODES}, "
                f"got {self.distractor_mode!r}")
        if self.min_object_separation < 0:
            raise ConfigError("min_object_separation must be >= 0")
        if self.max_pose_iters < 1:
            raise ConfigError("max_pose_iters must be >= 1")


def splitmix64(x: int) -> int:
    """One splitmix64 step; the standard 64-bit finalizer constants."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_bundle_seed(master_seed: int, family: str, bundle_index: int) -> int:
    """Collapse (master seed, family id, bundle index) to one 64-bit seed by
    chaining splitmix64 over the id bytes; distinct inputs get distinct
    streams with overwhelming probability."""
    state = splitmix64(master_seed & _MASK64)
    for byte in family.encode("utf-8"):
        state = splitmix64(state ^ byte)
    return splitmix64(state ^ (bundle_index & _MASK64))


def bundle_rng(master_seed: int, family: str, bundle_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(derive_bundle_seed(master_seed, family, bundle_index)))


def sample_boundary(rng: np.random.Generator, config: SamplerConfig = SamplerConfig()) -> DecisionBoundary:
    dim = int(rng.integers(1, config.d + 1))
    tau = float(rng.uniform(2 * config.epsilon, 1 - 2 * config.epsilon))
    sign = -1 if int(rng.integers(2)) == 0 else 1
    return DecisionBoundary(dim=dim, tau=tau, sign=sign, epsilon=config.epsilon)


def sample_label_sequence(rng: np.random.Generator, config: SamplerConfig = SamplerConfig()) -> tuple[tuple[int, ...], int]:
    """(shuffled demo labels, query label). The query label is drawn first,
    then the balanced demo block is shuffled."""
    half = config.n_examples // 2
    query = int(rng.integers(2))
    block = np.array([0] * half + [1] * half, dtype=np.int64)
    demos = tuple(int(v) for v in rng.permutation(block))
    return demos, query


def sample_pose_counted(
    rng: np.random.Generator,
    boundary: DecisionBoundary,
    y: int | None,
    config: SamplerConfig = SamplerConfig(),
    existing: tuple[Pose, ...] = (),
) -> tuple[Pose, int]:
    """Rejection-sample one pose; returns (pose, attempts).

    Uniform on [0,1]^D until the pose classifies as y with margin strictly
    above epsilon and, when a separation is configured, clears every pose in
    `existing`. Pass y=None to skip the label/margin constraint."""
    sep = config.min_object_separation
    for attempt in range(1, config.max_pose_iters + 1):
        pose = Pose(tuple(float(c) for c in rng.uniform(0.0, 1.0, size=config.d)))
        if y is not None:
            if classify(boundary, pose) != y or margin(boundary, pose) <= config.epsilon:
                continue
        if sep > 0 and any(_distance(pose, other) < sep for other in existing):
            continue
        return pose, attempt
    raise PoseSamplingError(
        f"no acceptable pose in {config.max_pose_iters} draws "
        f"(boundary={boundary}, label={y}); the acceptance region should "
        "never be this small for a validated config")


def sample_pose(
    rng: np.random.Generator,
    boundary: DecisionBoundary,
    y: int,
    config: SamplerConfig = SamplerConfig(),
) -> Pose:
    pose, _ = sample_pose_counted(rng, boundary, y, config)
    return pose


def _distance(a: Pose, b: Pose) -> float:
    return float(np.sqrt(sum((x - y) ** 2 for x, y in zip(a.coords, b.coords))))


def sample_distractor_class(
    rng: np.random.Generator,
    categories: tuple[str, ...],
    exclude: str,
) -> str:
    """Resample until the class differs from `exclude`, as the generation
    algorithm writes it (not a draw from the reduced set)."""
    while True:
        c = categories[int(rng.integers(len(categories)))]
        if c != exclude:
            return c


def sample_classes(
    rng: np.random.Generator,
    categories: tuple[str, ...],
    m: int,
) -> tuple[str, tuple[str, ...]]:
    """(target class, distractor classes)."""
    if not categories:
        raise ConfigError("object set has no categories")
    if m >= 2 and len(categories) < 2:
        raise ConfigError(
            f"need at least 2 categories for m={m}, got {len(categories)}")
    target = categories[int(rng.integers(len(categories)))]
    distractors = tuple(
        sample_distractor_class(rng, categories, target) for _ in range(m - 1))
    return target, distractors


def generate_bundle(
    family: TaskFamilyParams,
    config: SamplerConfig,
    master_seed: int,
    bundle_index: int,
    library: AssetLibrary = AssetLibrary(),
    templates: QuestionTemplateSet = QuestionTemplateSet(),
) -> PromptBundle:
    """Assemble one bundle's metadata (no pixels; rendering reads the result).

    Deterministic in (family, config, master_seed, bundle_index) for a fixed
    library and template set.
    """
    fid = family_id(family)
    categories = library.categories_for(family.object_set)
    if family.m >= 2 and len(categories) < 2:
        raise ConfigError(
            f"object set {family.object_set!r} has a single category; "
            f"cannot place {family.m - 1} distinct distractors")
    rng = bundle_rng(master_seed, fid, bundle_index)

    boundary = sample_boundary(rng, config)
    background_seed = int(rng.integers(1 << 63))
    target_class = categories[int(rng.integers(len(categories)))]
    question = build_question(family.text_mode, target_class, rng, templates)
    demo_labels, query_label = sample_label_sequence(rng, config)

    bundle_id = f"{fid}-b{bundle_index:07d}"
    n = config.n_examples
    labels = list(demo_labels) + [query_label]
    records: list[ExampleRecord] = []
    for j, y in enumerate(labels):
        is_query = j == n - 1
        suffix = "q" if is_query else f"d{j + 1}"
        example_seed = int(rng.integers(1 << 63))
        objects: list[ObjectInstance] = []
        placed: list[Pose] = []
        for k in range(family.m):
            constraint: int | None = y
            if k > 0 and config.distractor_mode == "unconstrained":
                constraint = None
            pose, _ = sample_pose_counted(rng, boundary, constraint, config,
                                          existing=tuple(placed))
            if k == 0:
                category = target_class
            else:
                category = sample_distractor_class(rng, categories, target_class)
            objects.append(ObjectInstance(
                category=category, pose=pose, is_target=(k == 0),
                style_seed=splitmix64(example_seed ^ k)))
            placed.append(pose)
        records.append(ExampleRecord(
            label=y,
            objects=tuple(objects),
            image_ref=f"images/{bundle_id}_{suffix}.png",
            example_seed=example_seed,
        ))

    demos = tuple(records[:-1])
    query = records[-1]
    prompt_text = build_prompt_text(question, n, [d.label for d in demos])
    return PromptBundle(
        bundle_id=bundle_id,
        family=family,
        boundary=boundary,
        question=question,
        demos=demos,
        query=query,
        prompt_text=prompt_text,
        master_seed=master_seed,
        bundle_index=bundle_index,
        background_seed=background_seed,
    )
