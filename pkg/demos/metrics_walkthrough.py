"""Walkthrough: the evaluation metrics on small hand-checkable inputs.

Covers mIoU with an ignore index (streaming and one-shot), FID from feature
statistics including a closed-form diagonal case, and Inception Score with
its boundary values.
"""

import numpy as np

from segsynth import (
    ConfusionCounts,
    FeatureStats,
    SemanticMask,
    accumulate_confusion,
    feature_stats,
    fid,
    inception_score,
    miou,
    pixel_accuracy,
)


def miou_section() -> None:
    # 2x2 example: class 0 IoU = 1/2, class 1 IoU = 2/3, mean = 7/12
    gt = SemanticMask(np.array([[0, 1], [1, 1]], dtype=np.uint8))
    pred = SemanticMask(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    per_class, mean = miou(pred, gt, num_classes=2)
    print(f"per-class IoU: {per_class}, mIoU = {mean:.6f} (7/12 = {7/12:.6f})")
    print(f"pixel accuracy: {pixel_accuracy(pred, gt):.4f}")

    # ignore pixels (255) drop out of both intersection and union
    gt_ign = SemanticMask(np.array([[0, 255], [1, 1]], dtype=np.uint8))
    _, mean_ign = miou(pred, gt_ign, num_classes=2)
    print(f"with one ignored pixel: mIoU = {mean_ign:.6f}")

    # streaming accumulation over many images equals one big evaluation
    counts = ConfusionCounts(num_classes=2)
    for _ in range(3):
        counts = accumulate_confusion(pred, gt, counts)
    _, streamed = counts.iou()
    print(f"streamed over 3 copies: mIoU = {streamed:.6f} (unchanged)")


def fid_section() -> None:
    rng = np.random.default_rng(0)
    real = rng.normal(size=(500, 16))
    synthetic = rng.normal(loc=0.3, size=(500, 16))
    stats_real = feature_stats(real)
    stats_synth = feature_stats(synthetic)
    print(f"fid(real, real) = {fid(stats_real, stats_real):.2e} (identical sets)")
    print(f"fid(real, synthetic) = {fid(stats_real, stats_synth):.4f}")

    # diagonal Gaussians have the closed form sum (sqrt(v1)-sqrt(v2))^2 + |mu1-mu2|^2
    mu1, mu2 = np.zeros(4), np.full(4, 0.5)
    v1, v2 = np.full(4, 1.0), np.full(4, 2.0)
    got = fid(FeatureStats(mu1, np.diag(v1), 100), FeatureStats(mu2, np.diag(v2), 100))
    closed = float(np.sum((np.sqrt(v1) - np.sqrt(v2)) ** 2) + np.sum((mu1 - mu2) ** 2))
    print(f"diagonal case: fid = {got:.6f}, closed form = {closed:.6f}")


def inception_score_section() -> None:
    uniform = np.full((8, 4), 0.25)
    mean, std = inception_score(uniform)
    print(f"uniform predictions: IS = {mean} (minimum, no class preference)")

    one_hot = np.eye(5)
    mean, _ = inception_score(one_hot)
    print(f"5 distinct one-hot rows: IS = {mean:.6f} (maximum = number of classes)")

    rng = np.random.default_rng(1)
    raw = rng.uniform(0.01, 1.0, size=(60, 10))
    probs = raw / raw.sum(axis=1, keepdims=True)
    mean, std = inception_score(probs, splits=3)
    print(f"random 60x10 matrix, 3 splits: IS = {mean:.4f} +/- {std:.4f}")


if __name__ == "__main__":
    miou_section()
    print()
    fid_section()
    print()
    inception_score_section()
