"""Evaluation metrics: R-precision, FID, MM Dist, diversity and multimodality."""
from __future__ import annotations

from .core import (
    FeatureSet,
    diversity,
    fid,
    matrix_sqrt_psd,
    mm_dist,
    moments,
    multimodality,
    r_precision,
    r_precision_topk,
)
from .report import MetricReport, StubFeatureExtractor, evaluate, load_feature_file, save_feature_file

__all__ = [
    "FeatureSet", "diversity", "fid", "matrix_sqrt_psd", "mm_dist", "moments", "multimodality", "r_precision",
    "r_precision_topk", "MetricReport", "StubFeatureExtractor", "evaluate", "load_feature_file",
    "save_feature_file",
]
