"""End-to-end generation: retrieve, compose a guide motion, refine it, decode.

The stage functions are plain; ``FeatureNormalizer`` and ``MotionGenerator``
wrap them with the estimator interface (``get_params``/``set_params``,
``fit``/``transform``/``predict``).
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._seeding import derive_seed
from .agents.decompose import AgentConfig
from .corpus.build import STD_FLOOR
from .corpus.database import MotionDatabase
from .diffusion.sde import NoiseSchedule, SdeditConfig, sdedit
from .errors import InvalidArgumentError, RMDError
from .motion import (
    MotionClip,
    SkeletonDef,
    compose_parts,
    default_skeleton,
    from_pose_features,
    load_masks,
    root_origin,
    to_pose_features,
)
from .retrieval.retrieve import Query, RetrievalPlan, hierarchical_retrieve
from .retrieval.scoring import RetrievalConfig

SEED_STAGES = ("retrieve", "sdedit")


@contextlib.contextmanager
def stage(name: str):
    """Tag any RMDError raised inside with the pipeline stage name."""
    try:
        yield
    except RMDError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def stage_seeds(seed: int) -> dict:
    return {s: derive_seed(seed, s) for s in SEED_STAGES}


class FeatureNormalizer(TransformerMixin, BaseEstimator):
    """Per-channel z-scoring. Supplied ``mean``/``std`` are used as-is; otherwise fit on rows."""

    def __init__(self, mean=None, std=None, std_floor=STD_FLOOR):
        self.mean = mean
        self.std = std
        self.std_floor = std_floor

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidArgumentError("expected (rows, channels)")
        mean = X.mean(axis=0) if self.mean is None else np.asarray(self.mean, dtype=np.float64)
        std = np.maximum(X.std(axis=0), self.std_floor) if self.std is None else np.asarray(self.std, np.float64)
        if mean.shape != (X.shape[1],) or std.shape != (X.shape[1],):
            raise InvalidArgumentError(f"normalizer statistics do not match {X.shape[1]} channels")
        if np.any(std <= 0):
            raise InvalidArgumentError("normalizer std must be > 0")
        self.mean_, self.std_ = mean, std
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_database(cls, db: MotionDatabase) -> "FeatureNormalizer":
        if db.feature_mean is None or db.feature_std is None:
            raise InvalidArgumentError("index has no feature statistics")
        norm = cls(np.asarray(db.feature_mean, np.float64), np.asarray(db.feature_std, np.float64))
        return norm.fit(np.zeros((1, db.feature_mean.shape[0])))

    def transform(self, X):
        check_is_fitted(self, "mean_")
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.std_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        return np.asarray(X, dtype=np.float64) * self.std_ + self.mean_


def compose_plan(db: MotionDatabase, plan: RetrievalPlan, length: int | None = None,
                 skeleton: SkeletonDef | None = None, masks=None) -> MotionClip:
    """Load the selected clips and splice them into one guide motion."""
    skeleton = skeleton or default_skeleton()
    masks = masks or load_masks(skeleton=skeleton)
    length = int(length or plan.length)
    if length < 1:
        raise InvalidArgumentError("compose needs a target length >= 1")
    clips = {}
    for part, sel in plan.selections.items():
        clip, sk = db.load_clip(sel.entry_id)
        if sk.joint_names != skeleton.joint_names:
            raise InvalidArgumentError(f"entry {sel.entry_id!r} uses a different skeleton")
        clips[part] = clip
    return compose_parts(clips, length, skeleton, masks, level=plan.level)


def refine_features(x_g, config: SdeditConfig, schedule: NoiseSchedule, score_model,
                    normalizer: FeatureNormalizer | None = None, condition: str = "") -> np.ndarray:
    """SDEdit in normalized space; ``t0 == 0`` returns the guide unchanged."""
    x_g = np.asarray(x_g, dtype=np.float64)
    if config.t0 == 0:
        return x_g.copy()
    if normalizer is None:
        return sdedit(x_g, config, schedule, score_model, condition)
    z = sdedit(normalizer.transform(x_g), config, schedule, score_model, condition)
    return normalizer.inverse_transform(z)


@dataclass
class GenerationResult:
    plan: RetrievalPlan
    guide: MotionClip
    guide_features: np.ndarray | None
    features: np.ndarray | None
    motion: MotionClip | None
    seeds: dict = field(default_factory=dict)


def generate(db: MotionDatabase, prompt: str, length: int, *, llm, embedder, score_model=None,
             retrieval: RetrievalConfig = RetrievalConfig(), agent: AgentConfig | None = None,
             sdedit_config: SdeditConfig = SdeditConfig(), schedule: NoiseSchedule = NoiseSchedule(),
             seed: int = 0, skeleton: SkeletonDef | None = None, masks=None, prompt_dir=None,
             dry_run: bool = False, force_level: str | None = None) -> GenerationResult:
    """Retrieve, compose, refine and decode one motion.

    ``dry_run`` stops after composition (no score model calls).
    """
    skeleton = skeleton or default_skeleton()
    if int(length) < 2:
        raise InvalidArgumentError("generated motions need at least 2 frames")
    seeds = stage_seeds(seed)
    with stage("retrieve"):
        plan = hierarchical_retrieve(db, Query(prompt, length), retrieval, llm, embedder, agent,
                                     seed=seeds["retrieve"], prompt_dir=prompt_dir, force_level=force_level)
    with stage("compose"):
        guide = compose_plan(db, plan, length, skeleton, masks)
    if dry_run:
        return GenerationResult(plan, guide, None, None, None, seeds)
    if score_model is None:
        raise InvalidArgumentError("generation needs a score model (or use dry_run)")
    with stage("refine"):
        x_g = to_pose_features(guide, skeleton)
        normalizer = FeatureNormalizer.from_database(db) if db.feature_mean is not None else None
        cfg = SdeditConfig(sdedit_config.t0, sdedit_config.steps, sdedit_config.mode, seeds["sdedit"])
        x = refine_features(x_g, cfg, schedule, score_model, normalizer, condition=prompt)
    with stage("decode"):
        motion = from_pose_features(x, skeleton, fps=guide.fps, origin=root_origin(guide))
    return GenerationResult(plan, guide, x_g, x, motion, seeds)


class MotionGenerator(BaseEstimator):
    """``fit(db)`` binds an index; ``predict`` maps (prompt, length) pairs to generated clips."""

    def __init__(self, llm=None, embedder=None, score_model=None, lam=0.05, tau_full=0.96, tau_half=0.96,
                 k=5, score_rule="max", t0=0.96, steps=50, mode="deterministic", sigma_min=0.01,
                 sigma_max=10.0, seed=0):
        self.llm = llm
        self.embedder = embedder
        self.score_model = score_model
        self.lam = lam
        self.tau_full = tau_full
        self.tau_half = tau_half
        self.k = k
        self.score_rule = score_rule
        self.t0 = t0
        self.steps = steps
        self.mode = mode
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.seed = seed

    def fit(self, db: MotionDatabase, y=None):
        if not isinstance(db, MotionDatabase) or len(db) == 0 or not db.is_embedded:
            raise InvalidArgumentError("MotionGenerator.fit expects a non-empty embedded MotionDatabase")
        self.retrieval_ = RetrievalConfig(self.lam, self.tau_full, self.tau_half, self.k, self.score_rule)
        self.sdedit_ = SdeditConfig(self.t0, self.steps, self.mode, self.seed)
        self.schedule_ = NoiseSchedule(self.sigma_min, self.sigma_max)
        self.db_ = db
        return self

    def generate(self, prompt: str, length: int) -> GenerationResult:
        check_is_fitted(self, "db_")
        return generate(self.db_, prompt, length, llm=self.llm, embedder=self.embedder,
                        score_model=self.score_model, retrieval=self.retrieval_, sdedit_config=self.sdedit_,
                        schedule=self.schedule_, seed=self.seed)

    def predict(self, queries):
        return [self.generate(p, n).motion for p, n in queries]
