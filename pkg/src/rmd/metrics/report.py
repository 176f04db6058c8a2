"""Metric report with repetition-based 95% confidence half-widths, and feature files."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .._seeding import derive_seed
from ..corpus.embedders import StubEmbedder
from ..errors import InvalidArgumentError
from .core import FeatureSet, diversity, fid, mm_dist, multimodality, r_precision_topk

Z95 = 1.959963984540054
MIN_REPS = 20


@dataclass(frozen=True)
class MetricReport:
    """Metric means plus 95% half-widths (``*_ci``); None when a metric was not computable."""

    top1: float | None = None
    top2: float | None = None
    top3: float | None = None
    fid: float | None = None
    mm_dist: float | None = None
    diversity: float | None = None
    multimodality: float | None = None
    top1_ci: float | None = None
    top2_ci: float | None = None
    top3_ci: float | None = None
    fid_ci: float | None = None
    mm_dist_ci: float | None = None
    diversity_ci: float | None = None
    multimodality_ci: float | None = None
    repetitions: int = MIN_REPS

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_ci(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(Z95 * v.std(ddof=1) / np.sqrt(v.size))


def evaluate(generated: FeatureSet, real=None, *, repetitions: int = MIN_REPS, seed: int = 0,
             batch_size: int = 32, diversity_pairs: int = 300, n_per_group: int = 10) -> MetricReport:
    """Compute every metric that the inputs support.

    Seeded metrics (R-precision, diversity, multimodality) are repeated with
    derived seeds. FID and MM Dist use the full data for the value and a
    row bootstrap for the half-width. ``real`` is a (rows, D) array of
    reference motion features for FID.
    """
    if repetitions < MIN_REPS:
        raise InvalidArgumentError(f"repetitions must be >= {MIN_REPS}")
    seeds = [derive_seed(seed, f"eval:{r}") for r in range(repetitions)]
    out: dict = {"repetitions": repetitions}
    n = len(generated)
    if generated.text_features is not None and n >= batch_size:
        tops = np.array([r_precision_topk(generated, 3, batch_size, s) for s in seeds])
        for k in range(3):
            out[f"top{k + 1}"], out[f"top{k + 1}_ci"] = _mean_ci(tops[:, k])
    if generated.text_features is not None:
        out["mm_dist"] = mm_dist(generated)
        boot = [mm_dist(generated.take(np.random.default_rng(s).integers(0, n, n))) for s in seeds]
        out["mm_dist_ci"] = float(Z95 * np.std(boot, ddof=1))
    if n >= 2:
        out["diversity"], out["diversity_ci"] = _mean_ci(
            [diversity(generated.motion_features, diversity_pairs, s) for s in seeds])
    if generated.group_ids is not None:
        out["multimodality"], out["multimodality_ci"] = _mean_ci(
            [multimodality(generated.motion_features, generated.group_ids, n_per_group, s) for s in seeds])
    if real is not None:
        real = np.asarray(real, dtype=np.float64)
        out["fid"] = fid(real, generated.motion_features)
        boots = []
        for s in seeds:
            rng = np.random.default_rng(s)
            boots.append(fid(real[rng.integers(0, len(real), len(real))],
                             generated.motion_features[rng.integers(0, n, n)]))
        out["fid_ci"] = float(Z95 * np.std(boots, ddof=1))
    return MetricReport(**out)


class StubFeatureExtractor:
    """Deterministic stand-in for a learned motion/text evaluator.

    Motion: per-channel mean and standard deviation over frames, projected by
    a fixed seeded Gaussian matrix. Text: the hashing stub embedder.
    """

    def __init__(self, dim: int = 32, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._proj: dict = {}

    def _projection(self, width: int) -> np.ndarray:
        if width not in self._proj:
            rng = np.random.default_rng([self.seed, width])
            self._proj[width] = rng.standard_normal((2 * width, self.dim)) / np.sqrt(2 * width)
        return self._proj[width]

    def motion(self, features) -> np.ndarray:
        f = _rows_2d(features)
        summary = np.concatenate([f.mean(axis=0), f.std(axis=0)])
        return summary @ self._projection(f.shape[1])

    def text(self, text: str) -> np.ndarray:
        return StubEmbedder(self.dim).embed([text])[0].astype(np.float64)


def _rows_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidArgumentError(f"expected a (frames, channels) array, got shape {x.shape}")
    return x


def load_feature_file(path) -> FeatureSet:
    """Read ``{"dim", "rows", "group_ids"?, "paired_text_rows"?}``."""
    try:
        d = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read feature file {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict) or "rows" not in d:
        raise InvalidArgumentError(f"{path}: feature file needs a 'rows' field")
    rows = np.asarray(d["rows"], dtype=np.float64)
    if "dim" in d and (rows.ndim != 2 or rows.shape[1] != d["dim"]):
        raise InvalidArgumentError(f"{path}: rows do not have dim {d['dim']}")
    return FeatureSet(rows, d.get("paired_text_rows"), d.get("group_ids"))


def save_feature_file(path, features: FeatureSet) -> None:
    d = {"dim": int(features.motion_features.shape[1]), "rows": features.motion_features.tolist()}
    if features.group_ids is not None:
        d["group_ids"] = list(features.group_ids)
    if features.text_features is not None:
        d["paired_text_rows"] = features.text_features.tolist()
    Path(path).write_text(json.dumps(d) + "\n", "utf-8")
