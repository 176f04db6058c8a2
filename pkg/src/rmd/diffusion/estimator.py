"""Transformer-style wrapper around SDEdit refinement."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import InvalidArgumentError
from .sde import NoiseSchedule, SdeditConfig, sdedit


class SDEditRefiner(TransformerMixin, BaseEstimator):
    """``transform`` refines one (frames, channels) guide sequence.

    ``fit`` has nothing to learn; it validates parameters and records the
    channel count so later inputs can be checked.
    """

    def __init__(self, score_model=None, t0=0.96, steps=50, mode="deterministic", seed=0,
                 sigma_min=0.01, sigma_max=10.0, condition=""):
        self.score_model = score_model
        self.t0 = t0
        self.steps = steps
        self.mode = mode
        self.seed = seed
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.condition = condition

    def fit(self, X, y=None):
        if self.score_model is None:
            raise InvalidArgumentError("SDEditRefiner needs a score_model")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidArgumentError("expected a (frames, channels) array")
        self.config_ = SdeditConfig(self.t0, self.steps, self.mode, self.seed)
        self.schedule_ = NoiseSchedule(self.sigma_min, self.sigma_max)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit(X)
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(f"expected (frames, {self.n_features_in_}) input, got {X.shape}")
        return sdedit(X, self.config_, self.schedule_, self.score_model, self.condition)
