"""High-quality image selection: cosine-similarity filtration against the
source image, then mask matching via re-segmentation of the synthetic image.

Cosine passers proceed to the (costlier) matching stage; each variant gets a
SelectionReport with its scores and decision."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .core import ClassTaxonomy, RgbImage, SemanticMask
from .errors import BackendError, DimensionMismatch, ZeroVector
from .generate import SyntheticVariant
from .maskgen import generate_pseudo_mask
from .metrics import miou

logger = logging.getLogger(__name__)


class Decision(enum.Enum):
    KEPT = "kept"
    REJECTED_COSINE = "rejected_cosine"
    REJECTED_MATCH = "rejected_match"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class SelectionReport:
    variant_index: int
    cosine_score: float
    match_miou: float | None
    decision: Decision
    epsilon: float
    tau: float
    reason: str = ""

    def __post_init__(self):
        if self.decision is Decision.REJECTED_COSINE:
            assert self.cosine_score <= self.epsilon
        if self.decision is Decision.KEPT:
            assert self.cosine_score > self.epsilon and self.match_miou >= self.tau


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"vector shapes {u.shape} vs {v.shape}")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValueError("embedding vectors must be finite")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity undefined for zero-norm vector")
    return float(u @ v / (nu * nv))


def cosine_filter(real_embedding, variant_embeddings, epsilon: float) -> list[tuple[float, bool]]:
    """Score each variant against the real image; pass is strict (> epsilon)."""
    if not -1.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [-1, 1]")
    results = []
    for emb in variant_embeddings:
        score = cosine_similarity(real_embedding, emb)
        results.append((score, score > epsilon))
    return results


def mask_match(
    pseudo_mask: SemanticMask,
    synthetic_image: RgbImage,
    backends,
    tau: float,
    taxonomy: ClassTaxonomy,
    score_threshold: float = 0.35,
) -> tuple[float, bool]:
    """Re-segment the synthetic image and compare against the pseudo-mask.

    The mIoU averages only over foreground classes present in the pseudo-mask,
    so absent classes cannot zero out the score.
    """
    classes = pseudo_mask.class_ids_present()
    if not classes:
        # Nothing to match against; degenerate records never reach generation.
        return 1.0, 1.0 >= tau
    result = generate_pseudo_mask(
        synthetic_image, classes, backends, taxonomy, score_threshold=score_threshold
    )
    predicted = result.mask
    if (predicted.height, predicted.width) != (pseudo_mask.height, pseudo_mask.width):
        # Generation may run at a different resolution than the source mask.
        from PIL import Image

        resized = Image.fromarray(np.asarray(predicted.values), mode="L").resize(
            (pseudo_mask.width, pseudo_mask.height), Image.NEAREST
        )
        predicted = SemanticMask(np.asarray(resized, dtype=np.uint8))
    num_classes = taxonomy.num_classes + 1
    per_class, _ = miou(predicted, pseudo_mask, num_classes)
    scores = [per_class[c] for c in classes]
    scores = [0.0 if np.isnan(s) else float(s) for s in scores]
    value = float(np.mean(scores))
    return value, value >= tau


def select(
    real_image: RgbImage,
    pseudo_mask: SemanticMask,
    variants: list[SyntheticVariant],
    backends,
    epsilon: float,
    tau: float,
    taxonomy: ClassTaxonomy,
    score_threshold: float = 0.35,
) -> list[SelectionReport]:
    """Two-stage selection over a record's variants, reports in index order."""
    if not variants:
        raise ValueError("record has no variants to select from")
    reports = []
    try:
        real_embedding = backends.embed(real_image)
    except BackendError as exc:
        return [
            SelectionReport(v.variant_index, float("nan"), None, Decision.SKIPPED,
                            epsilon, tau, reason=f"embed failed: {exc}")
            for v in variants
        ]
    for variant in sorted(variants, key=lambda v: v.variant_index):
        try:
            score = cosine_similarity(real_embedding, backends.embed(variant.image))
        except BackendError as exc:
            reports.append(SelectionReport(variant.variant_index, float("nan"), None,
                                           Decision.SKIPPED, epsilon, tau,
                                           reason=f"embed failed: {exc}"))
            continue
        if score <= epsilon:
            reports.append(SelectionReport(variant.variant_index, score, None,
                                           Decision.REJECTED_COSINE, epsilon, tau,
                                           reason=f"cosine {score:.4f} <= {epsilon}"))
            continue
        try:
            match_score, passed = mask_match(
                pseudo_mask, variant.image, backends, tau, taxonomy, score_threshold
            )
        except BackendError as exc:
            reports.append(SelectionReport(variant.variant_index, score, None,
                                           Decision.SKIPPED, epsilon, tau,
                                           reason=f"matching failed: {exc}"))
            continue
        if passed:
            reports.append(SelectionReport(variant.variant_index, score, match_score,
                                           Decision.KEPT, epsilon, tau))
        else:
            reports.append(SelectionReport(variant.variant_index, score, match_score,
                                           Decision.REJECTED_MATCH, epsilon, tau,
                                           reason=f"match mIoU {match_score:.4f} < {tau}"))
    if not any(r.decision is Decision.KEPT for r in reports):
        logger.info("record exhausted: no variant survived selection")
    return reports
