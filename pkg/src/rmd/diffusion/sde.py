"""Variance-exploding SDE refinement of a guide sequence (noise, then denoise).

The schedule is geometric, sigma(t) = sigma_min * (sigma_max / sigma_min)**t.
A reverse step from t to t - dt uses eps**2 = sigma(t)**2 - sigma(t - dt)**2:
stochastic mode adds eps**2 * score + eps * z, deterministic (probability
flow) mode adds eps**2 * score / 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, RMDError, ScoreModelError

MODES = ("deterministic", "stochastic_sde")


@dataclass(frozen=True)
class NoiseSchedule:
    sigma_min: float = 0.01
    sigma_max: float = 10.0
    kind: str = "geometric_ve"

    def __post_init__(self):
        if self.kind != "geometric_ve":
            raise InvalidArgumentError(f"unsupported schedule kind {self.kind!r}")
        if not 0 < self.sigma_min < self.sigma_max:
            raise InvalidArgumentError("schedule needs 0 < sigma_min < sigma_max")

    def __call__(self, t):
        return sigma(t, self)


@dataclass(frozen=True)
class SdeditConfig:
    t0: float = 0.96
    steps: int = 50
    mode: str = "deterministic"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.t0 <= 1.0:
            raise InvalidArgumentError("t0 must lie in [0, 1]")
        if self.steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")


def sigma(t, schedule: NoiseSchedule = NoiseSchedule()):
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > 1):
        raise InvalidArgumentError(f"t must lie in [0, 1], got {t}")
    out = schedule.sigma_min * (schedule.sigma_max / schedule.sigma_min) ** t_arr
    return float(out) if out.ndim == 0 else out


def noise_guide(x_g, t0: float, schedule: NoiseSchedule = NoiseSchedule(), seed=0):
    """x_g + sigma(t0) z with z ~ N(0, I); ``t0 == 0`` returns an unchanged copy.

    ``seed`` may be an int or a numpy Generator.
    """
    x_g = np.asarray(x_g, dtype=np.float64)
    if t0 == 0:
        return x_g.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return x_g + sigma(t0, schedule) * rng.standard_normal(x_g.shape)


def reverse_step(x, t: float, dt: float, score, mode: str = "deterministic", rng=None, *,
                 schedule: NoiseSchedule = NoiseSchedule(), noise=None):
    """One Euler step from t to t - dt given ``score`` = s(x, t) (an array).

    In stochastic mode ``noise`` pins z; otherwise z is drawn from ``rng``.
    """
    if not dt > 0:
        raise InvalidArgumentError("dt must be > 0")
    if t > 1 or t - dt < -1e-12:
        raise InvalidArgumentError("need 0 <= t - dt < t <= 1")
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}")
    x = np.asarray(x, dtype=np.float64)
    score = np.asarray(score, dtype=np.float64)
    eps2 = sigma(t, schedule) ** 2 - sigma(max(t - dt, 0.0), schedule) ** 2
    if mode == "deterministic":
        return x + 0.5 * eps2 * score
    if noise is None:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        noise = rng.standard_normal(x.shape)
    return x + eps2 * score + np.sqrt(eps2) * np.asarray(noise, dtype=np.float64)


def _score(model, x, t, condition, step):
    try:
        s = model.score(x, t, condition)
    except RMDError:
        raise
    except Exception as exc:  # any failure inside a user-supplied model
        raise ScoreModelError(f"score model raised {type(exc).__name__}: {exc}", step=step) from exc
    s = np.asarray(s, dtype=np.float64)
    if s.shape != x.shape:
        raise ScoreModelError(f"score shape {s.shape} != input shape {x.shape}", step=step)
    if not np.all(np.isfinite(s)):
        raise ScoreModelError("score contains non-finite values", step=step)
    return s


def sdedit(x_g, config: SdeditConfig, schedule: NoiseSchedule, score_model, condition: str = ""):
    """Noise the guide to t0, then integrate N reverse steps down to t = 0."""
    x_g = np.asarray(x_g, dtype=np.float64)
    if config.t0 == 0:
        return x_g.copy()
    rng = np.random.default_rng(config.seed)
    x = noise_guide(x_g, config.t0, schedule, rng)
    dt = config.t0 / config.steps
    for n in range(config.steps, 0, -1):
        t = config.t0 * n / config.steps
        s = _score(score_model, x, t, condition, n)
        x = reverse_step(x, t, dt, s, config.mode, rng, schedule=schedule)
    return x
