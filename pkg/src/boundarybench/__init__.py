"""Deterministic generator, exact-oracle validator, and scoring harness for
hidden-boundary visual in-context-learning benchmarks."""

from .model import (
    ConfigError,
    FamilyIdError,
    DecisionBoundary,
    ExampleRecord,
    ObjectInstance,
    Pose,
    PromptBundle,
    TaskFamilyParams,
    classify,
    family_id,
    margin,
    parse_family_id,
)
from .sampling import SamplerConfig, generate_bundle, sample_boundary, sample_pose
from .render import RenderConfig
from .prompts import QuestionTemplateSet, build_prompt_text, build_question
from .assets import AssetLibrary, AssetPack, load_asset_pack
from .dataset import (
    DatasetManifest,
    SplitSpec,
    enumerate_paper_grid,
    generate_family,
    load_manifest,
    regenerate_family,
)
from .curriculum import CurriculumPlan, CurriculumStage, plan_ablation, plan_curriculum
from .oracle import AuditReport, audit_dataset, consistent_set, oracle_predict
from .evaluate import (
    FamilyScore,
    compare_runs,
    correlate_stage_accuracies,
    parse_answer,
    score_family,
    z_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "AssetLibrary",
    "AssetPack",
    "AuditReport",
    "ConfigError",
    "CurriculumPlan",
    "CurriculumStage",
    "DatasetManifest",
    "DecisionBoundary",
    "ExampleRecord",
    "FamilyIdError",
    "FamilyScore",
    "ObjectInstance",
    "Pose",
    "PromptBundle",
    "QuestionTemplateSet",
    "RenderConfig",
    "SamplerConfig",
    "SplitSpec",
    "TaskFamilyParams",
    "audit_dataset",
    "build_prompt_text",
    "build_question",
    "classify",
    "compare_runs",
    "consistent_set",
    "correlate_stage_accuracies",
    "enumerate_paper_grid",
    "family_id",
    "generate_bundle",
    "generate_family",
    "load_asset_pack",
    "load_manifest",
    "margin",
    "oracle_predict",
    "parse_answer",
    "parse_family_id",
    "plan_ablation",
    "plan_curriculum",
    "regenerate_family",
    "sample_boundary",
    "sample_pose",
    "score_family",
    "z_threshold",
]
