"""End-to-end orchestration with per-record checkpointing and resume.

Stage 1 composes the prompt and pseudo-mask, stage 2 generates K variants,
stage 3 runs selection. Each record's state is appended to a work manifest
after every stage, so a killed run resumes where it stopped; completed
artifacts on disk are never rewritten.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backends import BackendConfig, HttpBackendSuite, MockBackendSuite, MockFixtures
from .core import ClassTaxonomy, RgbImage, decode_mask, encode_mask, voc_taxonomy
from .dataset import (
    DatasetRecord,
    ManifestAppender,
    VariantEntry,
    ingest_voc,
    read_manifest,
    write_manifest,
)
from .errors import (
    BackendError,
    ConfigError,
    EmptyCaption,
    GenerationFailed,
    SegSynthError,
)
from .generate import GenerationParams, SyntheticVariant, synthesize_variants
from .maskgen import generate_pseudo_mask
from .prompts import (
    PromptBundle,
    PromptSource,
    caption_image,
    compose_prompt,
    use_real_caption,
)
from .select import select as run_selection

logger = logging.getLogger(__name__)


class FailureBudgetExceeded(SegSynthError):
    """Too many records quarantined; backend likely misconfigured."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus_root: str
    out_dir: str
    taxonomy: str = "voc"  # "voc" or path to a taxonomy JSON
    split: str = "train"
    backends: str = "mock"  # "mock" or a base URL
    captions_file: str | None = None
    mask_source: str = "pseudo"  # "pseudo" | "ground_truth"
    k_per_image: int = 5
    epsilon: float = 0.8
    tau: float = 0.5
    alpha: float = 0.5
    seed: int = 0
    guidance_scale: float = 7.5
    denoising_steps: int = 50
    negative_prompt: str = ""
    width: int | None = None  # None: generate at source resolution
    height: int | None = None
    detect_threshold: float = 0.35
    embed_model: str = "default"
    failure_budget: float = 0.2
    jobs: int = 4

    def __post_init__(self):
        if self.mask_source not in ("pseudo", "ground_truth"):
            raise ConfigError(f"mask_source must be pseudo|ground_truth, got {self.mask_source!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha {self.alpha} outside [0, 1]")
        if not -1.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon {self.epsilon} outside [-1, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau {self.tau} outside [0, 1]")
        if self.k_per_image < 1:
            raise ConfigError("k_per_image must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_json_file(cls, path, **overrides) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text())
        doc.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def load_taxonomy(self) -> ClassTaxonomy:
        if self.taxonomy == "voc":
            return voc_taxonomy()
        return ClassTaxonomy.from_json_file(self.taxonomy)

    def make_backends(self, taxonomy: ClassTaxonomy):
        if self.backends == "mock":
            return MockBackendSuite(fixtures=MockFixtures(), taxonomy=taxonomy)
        return HttpBackendSuite(BackendConfig(base_url=self.backends))


def _load_real_captions(path) -> dict[str, list[str]]:
    captions: dict[str, list[str]] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        captions.setdefault(str(doc["image_id"]), []).append(doc["caption"])
    return captions


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.taxonomy = config.load_taxonomy()
        self.backends = config.make_backends(self.taxonomy)
        self.corpus_root = Path(config.corpus_root)
        self.out_dir = Path(config.out_dir)
        self.real_captions = (
            _load_real_captions(config.captions_file) if config.captions_file else {}
        )
        self._append_lock = threading.Lock()

    # -- paths ----------------------------------------------------------------
    @property
    def manifest_path(self) -> Path:
        return self.out_dir / "manifest.jsonl"

    @property
    def work_manifest_path(self) -> Path:
        return self.out_dir / "manifest.work.jsonl"

    def _pseudo_mask_path(self, record_id: str) -> Path:
        return self.out_dir / "pseudo_masks" / f"{record_id}.png"

    def _variant_path(self, record_id: str, j: int) -> Path:
        return self.out_dir / "variants" / f"{record_id}_{j:02d}.png"

    # -- stages ---------------------------------------------------------------
    def _stage_prepare(self, record: DatasetRecord) -> DatasetRecord:
        image = RgbImage.from_file(self.corpus_root / record.source_image_path)
        extra: tuple[str, ...] = ()
        if record.record_id in self.real_captions:
            available = self.real_captions[record.record_id]
            caption, extra = available[0], tuple(available[1:])
            bundle = use_real_caption(caption, record.class_ids, self.taxonomy)
        else:
            try:
                caption = caption_image(image, self.backends)
            except EmptyCaption:
                caption = ""
            bundle = compose_prompt(caption, record.class_ids, self.taxonomy)

        if self.config.mask_source == "ground_truth" and record.gt_mask_path:
            mask = decode_mask((self.corpus_root / record.gt_mask_path).read_bytes())
            boxes: tuple[dict, ...] = ()
            empty = not mask.class_ids_present()
        else:
            if not record.class_ids:
                return replace(record, status="quarantined",
                               quarantine_reason="no classes known for detection")
            result = generate_pseudo_mask(
                image, list(record.class_ids), self.backends, self.taxonomy,
                score_threshold=self.config.detect_threshold,
            )
            mask = result.mask
            empty = result.empty_detection
            boxes = tuple(
                {"xyxy": [b.x_min, b.y_min, b.x_max, b.y_max],
                 "score": b.score, "class_id": b.class_id}
                for b in result.boxes
            )

        mask_path = self._pseudo_mask_path(record.record_id)
        if not mask_path.exists():
            mask_path.parent.mkdir(parents=True, exist_ok=True)
            mask_path.write_bytes(encode_mask(mask, self.taxonomy))
        return replace(
            record,
            caption=bundle.caption,
            caption_source=bundle.source.value,
            extra_captions=extra,
            composed_prompt=bundle.composed,
            pseudo_mask_path=str(mask_path.relative_to(self.out_dir)),
            detection_boxes=boxes,
            status="empty_detection" if empty else "prepared",
        )

    def _stage_generate(self, record: DatasetRecord) -> DatasetRecord:
        mask = decode_mask((self.out_dir / record.pseudo_mask_path).read_bytes())
        params = GenerationParams(
            k_per_image=self.config.k_per_image,
            guidance_scale=self.config.guidance_scale,
            denoising_steps=self.config.denoising_steps,
            negative_prompt=self.config.negative_prompt,
            base_seed=self.config.seed,
            width=self.config.width or mask.width,
            height=self.config.height or mask.height,
        )
        bundle = PromptBundle(
            caption=record.caption,
            class_ids=tuple(record.class_ids),
            composed=record.composed_prompt,
            source=PromptSource(record.caption_source),
        )
        result = synthesize_variants(
            record.record_id, bundle, mask, params, self.backends, self.taxonomy
        )
        entries = []
        for variant in result.variants:
            path = self._variant_path(record.record_id, variant.variant_index)
            if not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                variant.image.save(path)
            entries.append(VariantEntry(
                variant_index=variant.variant_index,
                seed=variant.seed,
                image_path=str(path.relative_to(self.out_dir)),
            ))
        for failure in result.failures:
            entries.append(VariantEntry(
                variant_index=failure.variant_index,
                seed=failure.seed,
                image_path=None,
                failure_reason=failure.reason,
            ))
        entries.sort(key=lambda e: e.variant_index)
        return replace(record, variants=tuple(entries), status="generated")

    def _stage_select(self, record: DatasetRecord) -> DatasetRecord:
        image = RgbImage.from_file(self.corpus_root / record.source_image_path)
        mask = decode_mask((self.out_dir / record.pseudo_mask_path).read_bytes())
        loadable = [v for v in record.variants if v.image_path is not None]
        variants = [
            SyntheticVariant(
                parent_record_id=record.record_id,
                variant_index=v.variant_index,
                seed=v.seed,
                image=RgbImage.from_file(self.out_dir / v.image_path),
                prompt_used=record.composed_prompt,
            )
            for v in loadable
        ]
        reports = {
            r.variant_index: r
            for r in run_selection(
                image, mask, variants, self.backends,
                self.config.epsilon, self.config.tau, self.taxonomy,
                score_threshold=self.config.detect_threshold,
            )
        }
        entries = tuple(
            replace(v, selection=reports.get(v.variant_index)) for v in record.variants
        )
        return replace(record, variants=entries, status="selected")

    # -- driver -----------------------------------------------------------------
    def _process(self, record: DatasetRecord, appender: ManifestAppender, max_stage: int) -> DatasetRecord:
        stages = (
            ("ingested", 1, self._stage_prepare),
            ("prepared", 2, self._stage_generate),
            ("generated", 3, self._stage_select),
        )
        try:
            for entry_status, stage_no, stage_fn in stages:
                if record.status != entry_status or stage_no > max_stage:
                    continue
                record = stage_fn(record)
                with self._append_lock:
                    appender.append(record)
                if record.status in ("quarantined", "empty_detection"):
                    break
        except (BackendError, GenerationFailed, SegSynthError) as exc:
            logger.warning("record %s quarantined: %s", record.record_id, exc)
            record = replace(record, status="quarantined", quarantine_reason=str(exc))
            with self._append_lock:
                appender.append(record)
        return record

    def run(self, max_stage: int = 3) -> Path:
        """Execute (or resume) the pipeline; returns the final manifest path."""
        if self.manifest_path.exists():
            return self.manifest_path
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if self.work_manifest_path.exists():
            records = read_manifest(self.work_manifest_path)
        else:
            records = ingest_voc(self.corpus_root, self.taxonomy, self.config.split)
        appender = ManifestAppender(self.work_manifest_path)

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
            done = list(pool.map(lambda r: self._process(r, appender, max_stage), records))

        quarantined = sum(1 for r in done if r.status == "quarantined")
        if done and quarantined / len(done) > self.config.failure_budget:
            raise FailureBudgetExceeded(
                f"{quarantined}/{len(done)} records quarantined "
                f"(budget {self.config.failure_budget:.0%}); check backend configuration"
            )
        if max_stage >= 3:
            write_manifest(done, self.manifest_path)
            return self.manifest_path
        return self.work_manifest_path


def run(config: PipelineConfig, max_stage: int = 3) -> Path:
    return Pipeline(config).run(max_stage=max_stage)
