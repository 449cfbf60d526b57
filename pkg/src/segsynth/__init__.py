"""segsynth: training-free synthetic dataset generation for semantic segmentation."""

from .core import (
    IGNORE_INDEX,
    BBox,
    ClassTaxonomy,
    RgbImage,
    SemanticMask,
    canonicalize_class,
    decode_mask,
    encode_mask,
    voc_taxonomy,
)
from .dataset import (
    DatasetRecord,
    VariantEntry,
    assemble_dataset,
    ingest_voc,
    read_manifest,
    write_manifest,
)
from .generate import GenerationParams, SyntheticVariant, mask_to_control, synthesize_variants
from .maskgen import detect_objects, generate_pseudo_mask, merge_instances, segment_boxes
from .metrics import (
    ConfusionCounts,
    FeatureStats,
    accumulate_confusion,
    feature_stats,
    fid,
    inception_score,
    miou,
    pixel_accuracy,
)
from .pipeline import Pipeline, PipelineConfig
from .prompts import PromptBundle, PromptSource, caption_image, compose_prompt, use_real_caption
from .sample import BatchPlan, FoldSplit, filter_by_fold, plan_batches, split_folds
from .select import Decision, SelectionReport, cosine_filter, mask_match, select

__version__ = "0.1.0"
