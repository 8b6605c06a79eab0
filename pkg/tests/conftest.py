"""Shared fixtures: small configurations that keep test datasets cheap.

Rendering at 64x64 with three bundles per split is enough to exercise every
code path; the acceptance tests build their own full-size datasets where the
criteria demand it.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from boundarybench import (
    DatasetManifest,
    RenderConfig,
    SamplerConfig,
    SplitSpec,
    TaskFamilyParams,
    generate_family,
)


@pytest.fixture
def desk_family() -> TaskFamilyParams:
    return TaskFamilyParams("i5", "hard", 3, "guide")


@pytest.fixture
def plain_family() -> TaskFamilyParams:
    return TaskFamilyParams("i1", "easy", 1, "none")


@pytest.fixture
def tiny_render() -> RenderConfig:
    return RenderConfig(width=64, height=64)


@pytest.fixture
def tiny_splits() -> SplitSpec:
    return SplitSpec(train=3, val=2, test=3)


@pytest.fixture
def tiny_dataset(tmp_path: Path, desk_family: TaskFamilyParams,
                 tiny_render: RenderConfig,
                 tiny_splits: SplitSpec) -> DatasetManifest:
    """A fully rendered three/two/three dataset for the desk family."""
    return generate_family(
        family=desk_family,
        out_root=tmp_path / "data",
        master_seed=7,
        splits=tiny_splits,
        sampler=SamplerConfig(),
        render_cfg=tiny_render,
    )


@pytest.fixture
def metadata_dataset(tmp_path: Path, desk_family: TaskFamilyParams,
                     tiny_render: RenderConfig,
                     tiny_splits: SplitSpec) -> DatasetManifest:
    """Same dataset but without pixels, for tests that only read records."""
    return generate_family(
        family=desk_family,
        out_root=tmp_path / "meta",
        master_seed=7,
        splits=tiny_splits,
        sampler=SamplerConfig(),
        render_cfg=tiny_render,
        write_images=False,
    )
