"""Multi-way prompt generation: captions from a backend, class-appended prompts.

A composed prompt is the caption followed by "; " and the comma-joined
canonical names of every target class, so the generator is explicitly told
which classes must appear. With no caption available the composition falls
back to the plain "An image of <names>" template.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .core import ClassTaxonomy, RgbImage
from .errors import EmptyCaption

logger = logging.getLogger(__name__)

# Beyond this length text encoders typically truncate; worth a warning only.
_COMPOSED_WARN_LENGTH = 300


class PromptSource(enum.Enum):
    CAPTIONED = "captioned"
    REAL_CAPTION = "real_caption"
    CLASS_TEMPLATE = "class_template"


@dataclass(frozen=True)
class PromptBundle:
    caption: str
    class_ids: tuple[int, ...]
    composed: str
    source: PromptSource


def caption_image(image: RgbImage, captioner) -> str:
    """Fetch a caption for the image; blank responses are an error."""
    caption = captioner.caption(image).strip()
    if not caption:
        raise EmptyCaption("captioner returned a blank caption")
    return caption


def _class_suffix(class_ids, taxonomy: ClassTaxonomy) -> tuple[tuple[int, ...], str]:
    ids = tuple(sorted({int(c) for c in class_ids}))
    names = [taxonomy.name_of(c) for c in ids]
    return ids, ", ".join(names)


def _compose(caption: str, class_ids, taxonomy: ClassTaxonomy, source: PromptSource) -> PromptBundle:
    caption = caption.strip()
    ids, suffix = _class_suffix(class_ids, taxonomy)
    if caption:
        composed = f"{caption}; {suffix}" if suffix else caption
    else:
        composed = f"An image of {suffix}" if suffix else "An image"
        source = PromptSource.CLASS_TEMPLATE
    if len(composed) > _COMPOSED_WARN_LENGTH:
        logger.warning("composed prompt is %d characters; encoder may truncate", len(composed))
    return PromptBundle(caption=caption, class_ids=ids, composed=composed, source=source)


def compose_prompt(caption: str, class_ids, taxonomy: ClassTaxonomy) -> PromptBundle:
    """Append canonical class names (ascending id, deduplicated) to a caption."""
    return _compose(caption, class_ids, taxonomy, PromptSource.CAPTIONED)


def use_real_caption(caption: str, class_ids, taxonomy: ClassTaxonomy) -> PromptBundle:
    """Same composition rule but sourced from dataset-provided captions."""
    return _compose(caption, class_ids, taxonomy, PromptSource.REAL_CAPTION)
