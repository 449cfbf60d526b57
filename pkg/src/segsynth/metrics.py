"""Evaluation metrics: mIoU with ignore index, pixel accuracy, FID from
feature statistics, and Inception Score from class-probability matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IGNORE_INDEX, SemanticMask
from .errors import (
    DimensionMismatch,
    NotNormalized,
    NumericalFailure,
    ShapeMismatch,
    TooFewSamples,
)

_EIG_TOLERANCE = 1e-6


@dataclass
class ConfusionCounts:
    """Pixel counts indexed (gt_class, pred_class); ignore pixels excluded.

    ``num_classes`` includes background, i.e. valid labels are 0..num_classes-1.
    """

    num_classes: int
    matrix: np.ndarray = None

    def __post_init__(self):
        if self.matrix is None:
            self.matrix = np.zeros((self.num_classes, self.num_classes), dtype=np.int64)
        else:
            self.matrix = np.asarray(self.matrix, dtype=np.int64)
            if self.matrix.shape != (self.num_classes, self.num_classes):
                raise ShapeMismatch(f"confusion matrix shape {self.matrix.shape}")

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        if other.num_classes != self.num_classes:
            raise ShapeMismatch("cannot merge confusion counts of different sizes")
        return ConfusionCounts(self.num_classes, self.matrix + other.matrix)

    def iou(self) -> tuple[np.ndarray, float]:
        """Per-class IoU (NaN for classes with empty union) and their mean."""
        tp = np.diag(self.matrix).astype(np.float64)
        union = self.matrix.sum(axis=0) + self.matrix.sum(axis=1) - np.diag(self.matrix)
        per_class = np.full(self.num_classes, np.nan)
        valid = union > 0
        per_class[valid] = tp[valid] / union[valid]
        mean = float(np.nanmean(per_class)) if valid.any() else float("nan")
        return per_class, mean


def accumulate_confusion(
    pred: SemanticMask, gt: SemanticMask, counts: ConfusionCounts, ignore_index: int = IGNORE_INDEX
) -> ConfusionCounts:
    """Add one image pair into running counts (streaming mIoU)."""
    if pred.values.shape != gt.values.shape:
        raise ShapeMismatch(f"pred {pred.values.shape} vs gt {gt.values.shape}")
    n = counts.num_classes
    g = gt.values.reshape(-1).astype(np.int64)
    p = pred.values.reshape(-1).astype(np.int64)
    keep = (g != ignore_index) & (p != ignore_index)
    g, p = g[keep], p[keep]
    if ((g >= n) | (p >= n)).any():
        raise ShapeMismatch(f"mask contains labels >= num_classes ({n})")
    update = np.bincount(g * n + p, minlength=n * n).reshape(n, n)
    return ConfusionCounts(n, counts.matrix + update)


def miou(
    pred: SemanticMask, gt: SemanticMask, num_classes: int, ignore_index: int = IGNORE_INDEX
) -> tuple[np.ndarray, float]:
    """IoU_c = TP / (TP + FP + FN) per class; classes with empty union are
    excluded from the mean; ignore pixels excluded everywhere."""
    counts = accumulate_confusion(pred, gt, ConfusionCounts(num_classes), ignore_index)
    return counts.iou()


def pixel_accuracy(pred: SemanticMask, gt: SemanticMask, ignore_index: int = IGNORE_INDEX) -> float:
    if pred.values.shape != gt.values.shape:
        raise ShapeMismatch(f"pred {pred.values.shape} vs gt {gt.values.shape}")
    keep = gt.values != ignore_index
    total = int(keep.sum())
    if total == 0:
        return float("nan")
    return float((pred.values[keep] == gt.values[keep]).sum() / total)


@dataclass(frozen=True)
class FeatureStats:
    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=np.float64))
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise DimensionMismatch(f"covariance shape {self.covariance.shape} for mean dim {d}")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-9):
            raise NumericalFailure("covariance is not symmetric within 1e-9")
        if self.sample_count < 2:
            raise TooFewSamples("feature stats need at least 2 samples")


def feature_stats(vectors) -> FeatureStats:
    """Sample mean and (n-1)-divisor covariance of a stack of feature vectors."""
    arr = np.asarray(list(vectors), dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a stack of vectors, got shape {arr.shape}")
    n, d = arr.shape
    if n < 2:
        raise TooFewSamples(f"need at least 2 vectors, got {n}")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return FeatureStats(mean=mean, covariance=cov, sample_count=n)


def _psd_sqrt_trace(a: np.ndarray, b: np.ndarray) -> float:
    """Tr((a b)^{1/2}) via the symmetric product (a^{1/2} b a^{1/2})^{1/2}."""
    vals_a, vecs_a = np.linalg.eigh(a)
    if (vals_a < -_EIG_TOLERANCE).any():
        raise NumericalFailure(f"covariance has eigenvalue {vals_a.min():.3e} < -{_EIG_TOLERANCE}")
    sqrt_a = (vecs_a * np.sqrt(np.clip(vals_a, 0.0, None))) @ vecs_a.T
    product = sqrt_a @ b @ sqrt_a
    product = (product + product.T) / 2.0
    vals = np.linalg.eigvalsh(product)
    if (vals < -_EIG_TOLERANCE).any():
        raise NumericalFailure(f"product has eigenvalue {vals.min():.3e} < -{_EIG_TOLERANCE}")
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum())


def fid(a: FeatureStats, b: FeatureStats) -> float:
    """Frechet distance ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})."""
    if a.mean.shape != b.mean.shape:
        raise DimensionMismatch(f"dims {a.mean.shape} vs {b.mean.shape}")
    delta = a.mean - b.mean
    value = float(delta @ delta)
    value += float(np.trace(a.covariance) + np.trace(b.covariance))
    value -= 2.0 * _psd_sqrt_trace(a.covariance, b.covariance)
    return max(value, 0.0)


def inception_score(probs, splits: int = 1) -> tuple[float, float]:
    """exp(mean KL(p(y|x) || marginal)) per split; returns (mean, population std)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise DimensionMismatch(f"expected N x C matrix, got shape {p.shape}")
    n = p.shape[0]
    if splits < 1 or n < splits:
        raise TooFewSamples(f"need N >= splits >= 1, got N={n}, splits={splits}")
    if (p < 0).any() or not np.allclose(p.sum(axis=1), 1.0, atol=1e-6):
        raise NotNormalized("each probability row must be nonnegative and sum to 1 within 1e-6")
    scores = []
    for chunk in np.array_split(p, splits, axis=0):
        marginal = chunk.mean(axis=0)
        # 0 * log(0/q) = 0 by convention
        ratio = np.zeros_like(chunk)
        nz = chunk > 0
        ratio[nz] = np.log(chunk[nz] / np.broadcast_to(marginal, chunk.shape)[nz])
        kl = (chunk * ratio).sum(axis=1)
        scores.append(np.exp(kl.mean()))
    scores = np.asarray(scores)
    return float(scores.mean()), float(scores.std())
