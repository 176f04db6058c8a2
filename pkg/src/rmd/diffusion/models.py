"""Score models: closed-form Gaussian prior, a linear model, and JSON loading."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from ..errors import InvalidArgumentError
from .sde import NoiseSchedule, sigma


class ScoreModel(Protocol):
    def score(self, x: np.ndarray, t: float, condition: str = "") -> np.ndarray: ...


@dataclass(frozen=True)
class GaussianPrior:
    """Independent per-channel Gaussian N(mean, var); scalars broadcast."""

    mean: np.ndarray | float = 0.0
    var: np.ndarray | float = 1.0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(var)):
            raise InvalidArgumentError("prior parameters must be finite")
        if np.any(var <= 0):
            raise InvalidArgumentError("prior variance must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


def gaussian_prior_score(prior: GaussianPrior, x, t: float, schedule: NoiseSchedule = NoiseSchedule()):
    """Score of the prior convolved with N(0, sigma(t)^2): -(x - mean) / (var + sigma(t)^2)."""
    x = np.asarray(x, dtype=np.float64)
    return -(x - prior.mean) / (prior.var + sigma(t, schedule) ** 2)


class GaussianScoreModel:
    """Exact score of a Gaussian data distribution under the VE forward process."""

    def __init__(self, prior: GaussianPrior, schedule: NoiseSchedule = NoiseSchedule()):
        self.prior = prior
        self.schedule = schedule

    def score(self, x, t, condition=""):
        return gaussian_prior_score(self.prior, x, t, self.schedule)


class LinearScoreModel:
    """Time-independent affine score ``weight * x + bias`` (per channel, scalars broadcast)."""

    def __init__(self, weight=-1.0, bias=0.0):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    def score(self, x, t, condition=""):
        return self.weight * np.asarray(x, dtype=np.float64) + self.bias


def score_model_from_dict(d: dict, schedule: NoiseSchedule = NoiseSchedule()):
    kind = d.get("kind")
    try:
        if kind == "gaussian":
            return GaussianScoreModel(GaussianPrior(d["mean"], d["var"]), schedule)
        if kind == "linear":
            return LinearScoreModel(d["weight"], d.get("bias", 0.0))
    except KeyError as exc:
        raise InvalidArgumentError(f"score model of kind {kind!r} lacks field {exc}") from None
    raise InvalidArgumentError(f"unknown score model kind {kind!r}")


def load_score_model(path, schedule: NoiseSchedule = NoiseSchedule()):
    """Read ``{"kind": "gaussian", "mean", "var"}`` or ``{"kind": "linear", "weight", "bias"}``."""
    try:
        d = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read score model {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise InvalidArgumentError(f"{path}: score model must be a JSON object")
    return score_model_from_dict(d, schedule)
