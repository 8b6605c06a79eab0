"""Core data model: task families, hidden boundaries, poses, and prompt bundles.

Every value type is a frozen dataclass validated at construction, so a
constructed object is always internally consistent and safe to share across
workers. The label-generating rule lives here as `classify` / `margin`; all
other modules treat it as the single source of truth for ground-truth labels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

BUILTIN_BACKGROUNDS = ("i1", "i2", "i3", "i4", "i5")
BUILTIN_OBJECT_SETS = ("easy", "shape", "tshape", "tool", "hard")
TEXT_MODES = ("none", "guide")

# Custom set tokens double as path components and id segments.
_TOKEN_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")
_LEVEL_RE = re.compile(r"^i[0-9]+$")


class ConfigError(ValueError):
    """Bad user-supplied configuration (family ids, flags, config files).

    CLI maps this to exit code 2; everything else nonfatal maps to 1.
    """


class FamilyIdError(ConfigError):
    """A family id string failed to parse; message names the bad segment."""


def _check_token(token: str, segment: str) -> None:
    if not _TOKEN_RE.match(token):
        raise FamilyIdError(f"invalid token {token!r} in segment {segment!r}: "
                            "expected lowercase letters, digits, or hyphens")


@dataclass(frozen=True)
class TaskFamilyParams:
    """Difficulty parameters indexing one task family.

    background_set: one of i1..i5 or a registered asset-pack id.
    object_set: one of easy/shape/tshape/tool/hard or an asset-pack id.
    m: number of foreground objects per image (the first is the target).
    text_mode: "none" for uninformative questions, "guide" to name the target.
    """

    background_set: str
    object_set: str
    m: int
    text_mode: str

    def __post_init__(self) -> None:
        if self.background_set not in BUILTIN_BACKGROUNDS:
            if _LEVEL_RE.match(self.background_set):
                raise FamilyIdError(
                    f"unknown background level {self.background_set!r} in segment "
                    f"'bg-{self.background_set}': builtin levels are i1..i5")
            _check_token(self.background_set, f"bg-{self.background_set}")
        if self.object_set not in BUILTIN_OBJECT_SETS:
            _check_token(self.object_set, f"obj-{self.object_set}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m!r}")
        if self.text_mode not in TEXT_MODES:
            raise FamilyIdError(
                f"unknown text mode {self.text_mode!r} in segment "
                f"'text-{self.text_mode}': expected one of {TEXT_MODES}")

    @property
    def family_id(self) -> str:
        return family_id(self)


def family_id(params: TaskFamilyParams) -> str:
    """Canonical filesystem-safe id, e.g. ``bg-i5_obj-hard_m3_text-guide``."""
    return (f"bg-{params.background_set}_obj-{params.object_set}"
            f"_m{params.m}_text-{params.text_mode}")


def parse_family_id(family: str) -> TaskFamilyParams:
    """Inverse of `family_id`; raises FamilyIdError naming the bad segment."""
    segments = family.split("_")
    if len(segments) != 4:
        raise FamilyIdError(
            f"family id {family!r} must have 4 '_'-separated segments "
            "(bg-*, obj-*, m*, text-*), got " + str(len(segments)))
    bg_seg, obj_seg, m_seg, text_seg = segments
    if not bg_seg.startswith("bg-"):
        raise FamilyIdError(f"segment {bg_seg!r} must start with 'bg-'")
    if not obj_seg.startswith("obj-"):
        raise FamilyIdError(f"segment {obj_seg!r} must start with 'obj-'")
    m_match = re.match(r"^m([0-9]+)$", m_seg)
    if not m_match:
        raise FamilyIdError(f"segment {m_seg!r} must look like 'm<count>'")
    if not text_seg.startswith("text-"):
        raise FamilyIdError(f"segment {text_seg!r} must start with 'text-'")
    m = int(m_match.group(1))
    if m < 1:
        raise FamilyIdError(f"segment {m_seg!r}: object count must be >= 1")
    return TaskFamilyParams(
        background_set=bg_seg[len("bg-"):],
        object_set=obj_seg[len("obj-"):],
        m=m,
        text_mode=text_seg[len("text-"):],
    )


@dataclass(frozen=True)
class DecisionBoundary:
    """Hidden axis-aligned threshold rule shared by all examples of a bundle.

    Labels 1 exactly when sign * (coord[dim] - tau) > 0 (strict inequality;
    the epsilon margin keeps generated poses away from the tie).
    `dim` is 1-based. `tau` must leave an acceptance region of length >=
    epsilon on both sides, i.e. 2*epsilon <= tau <= 1 - 2*epsilon.
    """

    dim: int
    tau: float
    sign: int
    epsilon: float = 0.05

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"boundary dim must be >= 1, got {self.dim}")
        if self.sign not in (-1, 1):
            raise ValueError(f"boundary sign must be -1 or +1, got {self.sign}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (2 * self.epsilon <= self.tau <= 1 - 2 * self.epsilon):
            raise ValueError(
                f"tau={self.tau} outside feasible range "
                f"[{2 * self.epsilon}, {1 - 2 * self.epsilon}]")


@dataclass(frozen=True)
class Pose:
    """Normalized object position: coords[0] = left->right fraction,
    coords[1] = top->bottom fraction. Extra dimensions are allowed and
    carried through, but only the first two are rendered."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coords) < 1:
            raise ValueError("pose needs at least one coordinate")
        for c in self.coords:
            if not (0.0 <= c <= 1.0):
                raise ValueError(f"pose coordinate {c} outside [0, 1]")


def classify(boundary: DecisionBoundary, pose: Pose) -> int:
    """Ground-truth label of a pose under a boundary: 1 iff the thresholded
    coordinate lies strictly on the positive side."""
    if len(pose.coords) < boundary.dim:
        raise ValueError(
            f"pose has {len(pose.coords)} dims, boundary needs dim {boundary.dim}")
    coord = pose.coords[boundary.dim - 1]
    return 1 if boundary.sign * (coord - boundary.tau) > 0 else 0


def margin(boundary: DecisionBoundary, pose: Pose) -> float:
    """Distance |coord - tau| of the thresholded coordinate from the boundary."""
    if len(pose.coords) < boundary.dim:
        raise ValueError(
            f"pose has {len(pose.coords)} dims, boundary needs dim {boundary.dim}")
    return abs(pose.coords[boundary.dim - 1] - boundary.tau)


@dataclass(frozen=True)
class ObjectInstance:
    """One placed foreground object; `is_target` marks the label-bearing one."""

    category: str
    pose: Pose
    is_target: bool
    style_seed: int

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("object category must be non-empty")


@dataclass(frozen=True)
class ExampleRecord:
    """One labeled image: the target object first, then distractors.

    example_seed is the root of the example's style randomness (each
    object's style_seed derives from it), so one example can be re-rendered
    without replaying the whole bundle.
    """

    label: int
    objects: tuple[ObjectInstance, ...]
    image_ref: str
    example_seed: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not self.objects:
            raise ValueError("example must contain at least one object")
        n_targets = sum(1 for o in self.objects if o.is_target)
        if n_targets != 1:
            raise ValueError(f"exactly one object must be the target, got {n_targets}")
        if not self.objects[0].is_target:
            raise ValueError("the target object must come first")

    @property
    def target(self) -> ObjectInstance:
        return self.objects[0]


@dataclass(frozen=True)
class PromptBundle:
    """One in-context instance: N-1 labeled demonstrations plus a query,
    sharing a question, a background, and one hidden boundary.

    `background_seed` pins the shared background realization; demo labels are
    exactly balanced; `prompt_text` carries one image placeholder per example.
    """

    bundle_id: str
    family: TaskFamilyParams
    boundary: DecisionBoundary
    question: str
    demos: tuple[ExampleRecord, ...]
    query: ExampleRecord
    prompt_text: str
    master_seed: int
    bundle_index: int
    background_seed: int

    def __post_init__(self) -> None:
        n = len(self.demos) + 1
        half = n // 2
        ones = sum(d.label for d in self.demos)
        zeros = len(self.demos) - ones
        if ones != half or zeros != half:
            raise ValueError(
                f"demo labels must balance {half}/{half}, got {ones} ones / {zeros} zeros")
        placeholders = self.prompt_text.count("<image>")
        if placeholders != n:
            raise ValueError(
                f"prompt text must contain exactly {n} <image> placeholders, "
                f"found {placeholders}")
        for rec in self.examples:
            if len(rec.objects) != self.family.m:
                raise ValueError(
                    f"example has {len(rec.objects)} objects, family requires {self.family.m}")

    @property
    def examples(self) -> tuple[ExampleRecord, ...]:
        return self.demos + (self.query,)

    @property
    def n_examples(self) -> int:
        return len(self.demos) + 1


def demo_label_counts(bundle: PromptBundle) -> tuple[int, int]:
    """(zeros, ones) over the demonstration labels."""
    ones = sum(d.label for d in bundle.demos)
    return len(bundle.demos) - ones, ones
