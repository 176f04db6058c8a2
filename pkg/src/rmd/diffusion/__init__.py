"""Variance-exploding SDEdit refinement with pluggable score models."""
from __future__ import annotations

from .estimator import SDEditRefiner
from .models import (
    GaussianPrior,
    GaussianScoreModel,
    LinearScoreModel,
    ScoreModel,
    gaussian_prior_score,
    load_score_model,
    score_model_from_dict,
)
from .sde import MODES, NoiseSchedule, SdeditConfig, noise_guide, reverse_step, sdedit, sigma

__all__ = [
    "SDEditRefiner", "GaussianPrior", "GaussianScoreModel", "LinearScoreModel", "ScoreModel",
    "gaussian_prior_score", "load_score_model", "score_model_from_dict", "MODES", "NoiseSchedule",
    "SdeditConfig", "noise_guide", "reverse_step", "sdedit", "sigma",
]
