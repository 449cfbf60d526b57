"""Deterministic mock backends.

Every capability is a pure function of (inputs, fixtures, seed), so pipelines
built on these mocks are exactly reproducible:

* caption: fixture lookup by image digest, else "an image of <classes>" when
  classes were registered for the image, else "an image".
* detect: fixture boxes by digest; without fixtures, regions whose pixels sit
  near a taxonomy palette color are detected (so re-segmenting generated
  images works end to end).
* segment: each box filled as a solid rectangle.
* generate: the control image blended with a seed-derived pseudo-random
  pattern at configurable strength, so cosine scores vary controllably.
* embed: L2-normalized 8x8 grayscale downsample of the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .._rng import splitmix64, unit_float
from ..core import ClassTaxonomy, RgbImage
from .base import CAPABILITIES, BackendSuite, RawDetection


@dataclass
class MockFixtures:
    """Per-image fixtures keyed by content digest."""

    captions: dict[str, str] = field(default_factory=dict)
    boxes: dict[str, list[RawDetection]] = field(default_factory=dict)
    classes: dict[str, list[str]] = field(default_factory=dict)

    def register(self, image: RgbImage, caption: str | None = None,
                 boxes: list[RawDetection] | None = None,
                 classes: list[str] | None = None) -> str:
        digest = image.digest()
        if caption is not None:
            self.captions[digest] = caption
        if boxes is not None:
            self.boxes[digest] = list(boxes)
        if classes is not None:
            self.classes[digest] = list(classes)
        return digest


class MockBackendSuite(BackendSuite):
    def __init__(
        self,
        fixtures: MockFixtures | None = None,
        taxonomy: ClassTaxonomy | None = None,
        blend_strength: float = 0.15,
        blend_jitter: float = 0.5,
        color_tolerance: int = 60,
        min_region_pixels: int = 4,
    ):
        self.fixtures = fixtures or MockFixtures()
        self.taxonomy = taxonomy
        self.blend_strength = blend_strength
        self.blend_jitter = blend_jitter
        self.color_tolerance = color_tolerance
        self.min_region_pixels = min_region_pixels

    # -- caption ------------------------------------------------------------
    def caption(self, image: RgbImage) -> str:
        digest = image.digest()
        if digest in self.fixtures.captions:
            return self.fixtures.captions[digest]
        classes = self.fixtures.classes.get(digest)
        if classes:
            return "an image of " + ", ".join(classes)
        return "an image"

    # -- detect -------------------------------------------------------------
    def detect(self, image: RgbImage, class_names, threshold: float) -> list[RawDetection]:
        digest = image.digest()
        if digest in self.fixtures.boxes:
            candidates = self.fixtures.boxes[digest]
        else:
            candidates = self._detect_by_palette(image, class_names)
        return [d for d in candidates if d.score >= threshold]

    def _detect_by_palette(self, image: RgbImage, class_names) -> list[RawDetection]:
        if self.taxonomy is None:
            return []
        detections = []
        pixels = image.pixels.astype(np.int16)
        for name in class_names:
            color = np.array(self.taxonomy.color_of(self.taxonomy.resolve(name)), dtype=np.int16)
            near = (np.abs(pixels - color) <= self.color_tolerance).all(axis=2)
            count = int(near.sum())
            if count < self.min_region_pixels:
                continue
            ys, xs = np.nonzero(near)
            x0, x1 = int(xs.min()), int(xs.max()) + 1
            y0, y1 = int(ys.min()), int(ys.max()) + 1
            coverage = count / float((x1 - x0) * (y1 - y0))
            detections.append(RawDetection(xyxy=(x0, y0, x1, y1), label=name, score=round(coverage, 6)))
        return detections

    # -- segment ------------------------------------------------------------
    def segment(self, image: RgbImage, boxes) -> list[np.ndarray]:
        masks = []
        for x0, y0, x1, y1 in boxes:
            mask = np.zeros((image.height, image.width), dtype=bool)
            r0, r1 = int(np.floor(y0)), int(np.ceil(y1))
            c0, c1 = int(np.floor(x0)), int(np.ceil(x1))
            mask[max(r0, 0) : r1, max(c0, 0) : c1] = True
            masks.append(mask)
        return masks

    # -- generate -----------------------------------------------------------
    def generate(self, control: RgbImage, prompt: str, seed: int, steps: int,
                 guidance_scale: float, width: int, height: int,
                 negative_prompt: str = "") -> RgbImage:
        base = control.pixels
        if (control.width, control.height) != (width, height):
            img = Image.fromarray(np.asarray(base)).resize((width, height), Image.NEAREST)
            base = np.asarray(img)
        rng = np.random.Generator(np.random.PCG64(seed))
        pattern = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        jitter = 1.0 + self.blend_jitter * (2.0 * unit_float(splitmix64(seed)) - 1.0)
        strength = float(np.clip(self.blend_strength * jitter, 0.0, 1.0))
        blended = (1.0 - strength) * base.astype(np.float64) + strength * pattern.astype(np.float64)
        return RgbImage(np.round(blended).astype(np.uint8))

    # -- embed --------------------------------------------------------------
    def embed(self, image: RgbImage, model_tag: str = "default") -> np.ndarray:
        gray = Image.fromarray(np.asarray(image.pixels)).convert("L").resize((8, 8), Image.BILINEAR)
        vector = np.asarray(gray, dtype=np.float64).reshape(-1)
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else vector

    # -- health -------------------------------------------------------------
    def health(self) -> list[str]:
        return list(CAPABILITIES)
