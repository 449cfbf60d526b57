"""Pseudo-mask generation: open-vocabulary detection, box-guided segmentation,
and score-ordered fusion of instance masks into one semantic mask."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BBox, ClassTaxonomy, RgbImage, SemanticMask, canonicalize_class
from .errors import ShapeMismatch, UnknownClass


@dataclass(frozen=True)
class InstanceMask:
    bbox: BBox
    mask: np.ndarray  # (H, W) bool, full-image extent
    class_id: int
    score: float


@dataclass(frozen=True)
class PseudoMaskResult:
    mask: SemanticMask
    boxes: tuple[BBox, ...]
    empty_detection: bool


def detect_objects(
    image: RgbImage,
    class_names: list[str],
    detector,
    score_threshold: float,
    taxonomy: ClassTaxonomy,
) -> list[BBox]:
    """Query the detector and return thresholded, clamped, canonicalized boxes."""
    if not class_names:
        raise ValueError("class_names must be non-empty")
    if not 0.0 <= score_threshold <= 1.0:
        raise ValueError(f"score_threshold {score_threshold} outside [0, 1]")
    query_ids = {canonicalize_class(n, taxonomy) for n in class_names}
    boxes = []
    for det in detector.detect(image, list(class_names), score_threshold):
        if det.score < score_threshold:
            continue
        class_id = canonicalize_class(det.label, taxonomy)
        if class_id not in query_ids:
            raise UnknownClass(f"detector returned label {det.label!r} outside the query set")
        x0, y0, x1, y1 = det.xyxy
        boxes.append(
            BBox(x0, y0, x1, y1, score=det.score, class_id=class_id).clamped(image.width, image.height)
        )
    return boxes


def segment_boxes(image: RgbImage, boxes: list[BBox], segmenter) -> list[InstanceMask]:
    """One instance mask per box, in box order."""
    if not boxes:
        return []
    raw = segmenter.segment(image, [(b.x_min, b.y_min, b.x_max, b.y_max) for b in boxes])
    if len(raw) != len(boxes):
        raise ShapeMismatch(f"segmenter returned {len(raw)} masks for {len(boxes)} boxes")
    instances = []
    for box, mask in zip(boxes, raw):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (image.height, image.width):
            raise ShapeMismatch(
                f"segment mask shape {mask.shape} disagrees with image {(image.height, image.width)}"
            )
        instances.append(InstanceMask(bbox=box, mask=mask, class_id=box.class_id, score=box.score))
    return instances


def merge_instances(instances: list[InstanceMask], width: int, height: int) -> SemanticMask:
    """Fuse instances: each pixel takes the class of the highest-score instance
    covering it; equal scores resolve to the earlier list index; uncovered
    pixels stay background."""
    merged = np.zeros((height, width), dtype=np.uint8)
    # Paint in ascending (score, -index) order so the winner paints last.
    order = sorted(range(len(instances)), key=lambda k: (instances[k].score, -k))
    for k in order:
        inst = instances[k]
        if inst.mask.shape != (height, width):
            raise ShapeMismatch(f"instance mask shape {inst.mask.shape} != {(height, width)}")
        merged[inst.mask] = inst.class_id
    return SemanticMask(merged)


def generate_pseudo_mask(
    image: RgbImage,
    class_ids: list[int],
    backends,
    taxonomy: ClassTaxonomy,
    score_threshold: float = 0.35,
) -> PseudoMaskResult:
    """detect -> segment -> merge; an empty detection is flagged, not an error."""
    class_names = [taxonomy.name_of(c) for c in sorted(set(class_ids))]
    boxes = detect_objects(image, class_names, backends, score_threshold, taxonomy)
    instances = segment_boxes(image, boxes, backends)
    mask = merge_instances(instances, image.width, image.height)
    return PseudoMaskResult(mask=mask, boxes=tuple(boxes), empty_detection=not boxes)
