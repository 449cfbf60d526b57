"""Conditional generation stage: render masks as control images and request
K diffusion samples per record through the generate backend."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed
from .core import IGNORE_INDEX, ClassTaxonomy, RgbImage, SemanticMask
from .errors import BackendError, GenerationFailed
from .prompts import PromptBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationParams:
    k_per_image: int = 5
    guidance_scale: float = 7.5
    denoising_steps: int = 50
    negative_prompt: str = ""
    base_seed: int = 0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.k_per_image < 1:
            raise ValueError("k_per_image must be >= 1")
        if self.denoising_steps < 1:
            raise ValueError("denoising_steps must be >= 1")
        if self.guidance_scale <= 0:
            raise ValueError("guidance_scale must be positive")


@dataclass(frozen=True)
class SyntheticVariant:
    parent_record_id: str
    variant_index: int
    seed: int
    image: RgbImage
    prompt_used: str


@dataclass(frozen=True)
class VariantFailure:
    variant_index: int
    seed: int
    reason: str


@dataclass(frozen=True)
class GenerationResult:
    variants: tuple[SyntheticVariant, ...]
    failures: tuple[VariantFailure, ...]


def mask_to_control(mask: SemanticMask, taxonomy: ClassTaxonomy) -> RgbImage:
    """Render a semantic mask as an RGB control image via the palette;
    ignore pixels render as background."""
    max_id = taxonomy.num_classes
    table = np.zeros((256, 3), dtype=np.uint8)
    table[0] = taxonomy.color_of(0)
    for cid in taxonomy.class_ids:
        table[cid] = taxonomy.color_of(cid)
    table[IGNORE_INDEX] = taxonomy.color_of(0)
    return RgbImage(table[mask.values])


def variant_seed(base_seed: int, record_id: str, variant_index: int) -> int:
    return derive_seed(base_seed, record_id, variant_index)


def synthesize_variants(
    record_id: str,
    prompt: PromptBundle,
    mask: SemanticMask,
    params: GenerationParams,
    generator,
    taxonomy: ClassTaxonomy,
) -> GenerationResult:
    """Request exactly K variants; per-variant backend failures are recorded
    and skipped, fatal only when all K fail."""
    control = mask_to_control(mask, taxonomy)
    variants = []
    failures = []
    for j in range(params.k_per_image):
        seed = variant_seed(params.base_seed, record_id, j)
        try:
            image = generator.generate(
                control=control,
                prompt=prompt.composed,
                seed=seed,
                steps=params.denoising_steps,
                guidance_scale=params.guidance_scale,
                width=params.width,
                height=params.height,
                negative_prompt=params.negative_prompt,
            )
        except BackendError as exc:
            logger.warning("variant %s/%d failed: %s", record_id, j, exc)
            failures.append(VariantFailure(variant_index=j, seed=seed, reason=str(exc)))
            continue
        variants.append(
            SyntheticVariant(
                parent_record_id=record_id,
                variant_index=j,
                seed=seed,
                image=image,
                prompt_used=prompt.composed,
            )
        )
    if not variants:
        raise GenerationFailed(f"all {params.k_per_image} variants of {record_id} failed")
    return GenerationResult(variants=tuple(variants), failures=tuple(failures))
