"""Text-to-motion evaluation metrics over precomputed feature vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError

SYM_TOL = 1e-8
NEG_TOL = 1e-8


def _rows(x, name="features", min_rows=1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a 2-D array of rows, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise InvalidArgumentError(f"{name} needs at least {min_rows} rows, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return x


@dataclass(frozen=True)
class FeatureSet:
    """Motion feature rows with optional paired text rows and per-row prompt groups."""

    motion_features: np.ndarray
    text_features: np.ndarray | None = None
    group_ids: tuple | None = None

    def __post_init__(self):
        m = _rows(self.motion_features, "motion_features")
        object.__setattr__(self, "motion_features", m)
        if self.text_features is not None:
            t = _rows(self.text_features, "text_features")
            if t.shape != m.shape:
                raise InvalidArgumentError(f"text_features shape {t.shape} != motion_features shape {m.shape}")
            object.__setattr__(self, "text_features", t)
        if self.group_ids is not None:
            g = tuple(self.group_ids)
            if len(g) != m.shape[0]:
                raise InvalidArgumentError("group_ids must have one entry per row")
            object.__setattr__(self, "group_ids", g)

    def __len__(self):
        return self.motion_features.shape[0]

    def take(self, idx) -> "FeatureSet":
        idx = np.asarray(idx)
        return FeatureSet(self.motion_features[idx],
                          None if self.text_features is None else self.text_features[idx],
                          None if self.group_ids is None else tuple(self.group_ids[i] for i in idx))


def _paired(features: FeatureSet) -> tuple[np.ndarray, np.ndarray]:
    if features.text_features is None:
        raise InvalidArgumentError("metric needs paired text features")
    return features.motion_features, features.text_features


def _pairwise(a, b) -> np.ndarray:
    d2 = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
    return np.sqrt(np.maximum(d2, 0.0))


def r_precision_topk(features: FeatureSet, top_k: int = 3, batch_size: int = 32, seed=0) -> np.ndarray:
    """Top-1..top-k retrieval accuracy of each motion's own text within shuffled batches.

    Rows are shuffled with ``seed`` and cut into batches of ``batch_size``;
    the incomplete last batch is dropped. Texts are ranked by Euclidean
    distance with a stable sort, so on exact ties the lower batch position wins.
    """
    motion, text = _paired(features)
    n = motion.shape[0]
    if batch_size < 1 or top_k < 1:
        raise InvalidArgumentError("batch_size and top_k must be >= 1")
    if n < batch_size:
        raise InvalidArgumentError(f"r_precision needs at least batch_size={batch_size} rows, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    hits = np.zeros(top_k)
    used = 0
    for b in range(n // batch_size):
        idx = order[b * batch_size:(b + 1) * batch_size]
        dist = _pairwise(motion[idx], text[idx])
        ranking = np.argsort(dist, axis=1, kind="stable")
        rank = np.argmax(ranking == np.arange(batch_size)[:, None], axis=1)
        for k in range(top_k):
            hits[k] += np.count_nonzero(rank <= k)
        used += batch_size
    return hits / used


def r_precision(features: FeatureSet, k: int = 1, batch_size: int = 32, seed=0) -> float:
    return float(r_precision_topk(features, k, batch_size, seed)[k - 1])


def matrix_sqrt_psd(a) -> np.ndarray:
    """Symmetric PSD square root by eigendecomposition.

    Rejects asymmetry above 1e-8 and eigenvalues below -1e-8 (relative to the
    largest eigenvalue magnitude when that exceeds 1); smaller negatives are clipped.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"matrix_sqrt_psd needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > SYM_TOL * scale:
        raise InvalidArgumentError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    floor = -NEG_TOL * max(1.0, float(np.max(np.abs(w)))) if w.size else 0.0
    if w.size and w.min() < floor:
        raise InvalidArgumentError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def moments(rows) -> tuple[np.ndarray, np.ndarray]:
    rows = _rows(rows, min_rows=2)
    return rows.mean(axis=0), np.atleast_2d(np.cov(rows, rowvar=False))


def _as_moments(x):
    if isinstance(x, tuple) and len(x) == 2:
        mu = np.atleast_1d(np.asarray(x[0], dtype=np.float64))
        cov = np.atleast_2d(np.asarray(x[1], dtype=np.float64))
        if cov.shape != (mu.shape[0], mu.shape[0]):
            raise InvalidArgumentError(f"covariance shape {cov.shape} does not match mean {mu.shape}")
        return mu, cov
    return moments(x)


def fid(features_a, features_b) -> float:
    """Frechet distance between Gaussian fits.

    Each argument is a (rows, D) array or a ``(mean, covariance)`` tuple.
    """
    mu1, s1 = _as_moments(features_a)
    mu2, s2 = _as_moments(features_b)
    if mu1.shape != mu2.shape:
        raise InvalidArgumentError(f"feature dims differ: {mu1.shape[0]} vs {mu2.shape[0]}")
    r1 = matrix_sqrt_psd(s1)
    m = r1 @ s2 @ r1
    cross = np.trace(matrix_sqrt_psd(0.5 * (m + m.T)))
    value = float(np.sum((mu1 - mu2) ** 2) + np.trace(s1) + np.trace(s2) - 2.0 * cross)
    if value < -NEG_TOL * max(1.0, abs(np.trace(s1) + np.trace(s2))):
        raise InvalidArgumentError(f"fid is negative beyond numerical tolerance ({value:.3g})")
    return max(value, 0.0)


def _index_stream(rng, n: int, length: int) -> np.ndarray:
    reps = -(-length // n)
    return np.concatenate([rng.permutation(n) for _ in range(reps)])[:length]


def diversity(motion_features, n_pairs: int = 300, seed=0) -> float:
    """Mean distance over pairs drawn from two independent streams of shuffled indices."""
    x = _rows(motion_features, "motion_features", min_rows=2)
    if n_pairs < 1:
        raise InvalidArgumentError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    a = _index_stream(rng, x.shape[0], n_pairs)
    b = _index_stream(rng, x.shape[0], n_pairs)
    return float(np.mean(np.linalg.norm(x[a] - x[b], axis=1)))


def multimodality(motion_features, group_ids, n_per_group: int = 10, seed=0) -> float:
    """Per group, pair two disjoint random subsets of size ``n_per_group``; average over groups."""
    x = _rows(motion_features, "motion_features")
    group_ids = list(group_ids)
    if len(group_ids) != x.shape[0]:
        raise InvalidArgumentError("group_ids must have one entry per row")
    if n_per_group < 1:
        raise InvalidArgumentError("n_per_group must be >= 1")
    groups: dict = {}
    for i, g in enumerate(group_ids):
        groups.setdefault(g, []).append(i)
    if not groups:
        raise InvalidArgumentError("multimodality needs at least one group")
    rng = np.random.default_rng(seed)
    per_group = []
    for g in sorted(groups, key=str):
        idx = np.asarray(groups[g])
        if idx.size < 2 * n_per_group:
            raise InvalidArgumentError(f"group {g!r} has {idx.size} rows; needs {2 * n_per_group}")
        pick = rng.permutation(idx)[:2 * n_per_group]
        first, second = pick[:n_per_group], pick[n_per_group:]
        per_group.append(np.mean(np.linalg.norm(x[first] - x[second], axis=1)))
    return float(np.mean(per_group))


def mm_dist(features: FeatureSet) -> float:
    motion, text = _paired(features)
    return float(np.mean(np.linalg.norm(motion - text, axis=1)))
