"""Corpus ingestion (VOC layout), JSONL manifest persistence, and final
dataset assembly.

Manifests are append-safe JSONL with a schema-versioned header line; all
paths inside a manifest are relative to its directory so dataset trees stay
relocatable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import ClassTaxonomy, RgbImage, SemanticMask, decode_mask, encode_mask
from .errors import (
    DecodeFailure,
    InconsistentManifest,
    IoFailure,
    MissingFile,
    VersionError,
)
from .select import Decision, SelectionReport

MANIFEST_SCHEMA = "segsynth-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class VariantEntry:
    variant_index: int
    seed: int
    image_path: str | None
    selection: SelectionReport | None = None
    failure_reason: str | None = None

    def to_dict(self) -> dict:
        sel = None
        if self.selection is not None:
            s = self.selection
            sel = {
                "cosine_score": None if s.cosine_score != s.cosine_score else s.cosine_score,
                "match_miou": s.match_miou,
                "decision": s.decision.value,
                "epsilon": s.epsilon,
                "tau": s.tau,
                "reason": s.reason,
            }
        return {
            "j": self.variant_index,
            "seed": self.seed,
            "image": self.image_path,
            "selection": sel,
            "failure": self.failure_reason,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VariantEntry":
        sel = None
        if doc.get("selection") is not None:
            s = doc["selection"]
            sel = SelectionReport(
                variant_index=doc["j"],
                cosine_score=float("nan") if s["cosine_score"] is None else s["cosine_score"],
                match_miou=s["match_miou"],
                decision=Decision(s["decision"]),
                epsilon=s["epsilon"],
                tau=s["tau"],
                reason=s.get("reason", ""),
            )
        return cls(
            variant_index=doc["j"],
            seed=doc["seed"],
            image_path=doc.get("image"),
            selection=sel,
            failure_reason=doc.get("failure"),
        )


@dataclass(frozen=True)
class DatasetRecord:
    record_id: str
    source_image_path: str
    class_ids: tuple[int, ...] = ()
    caption: str = ""
    caption_source: str | None = None
    extra_captions: tuple[str, ...] = ()
    composed_prompt: str = ""
    pseudo_mask_path: str | None = None
    gt_mask_path: str | None = None
    detection_boxes: tuple[dict, ...] = ()
    variants: tuple[VariantEntry, ...] = ()
    status: str = "ingested"
    quarantine_reason: str | None = None

    def kept_variants(self) -> list[VariantEntry]:
        return [
            v for v in self.variants
            if v.selection is not None and v.selection.decision is Decision.KEPT
        ]

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "source_image": self.source_image_path,
            "class_ids": list(self.class_ids),
            "caption": self.caption,
            "caption_source": self.caption_source,
            "extra_captions": list(self.extra_captions),
            "composed_prompt": self.composed_prompt,
            "pseudo_mask": self.pseudo_mask_path,
            "gt_mask": self.gt_mask_path,
            "detection_boxes": list(self.detection_boxes),
            "variants": [v.to_dict() for v in self.variants],
            "status": self.status,
            "quarantine_reason": self.quarantine_reason,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetRecord":
        return cls(
            record_id=doc["record_id"],
            source_image_path=doc["source_image"],
            class_ids=tuple(doc.get("class_ids", ())),
            caption=doc.get("caption", ""),
            caption_source=doc.get("caption_source"),
            extra_captions=tuple(doc.get("extra_captions", ())),
            composed_prompt=doc.get("composed_prompt", ""),
            pseudo_mask_path=doc.get("pseudo_mask"),
            gt_mask_path=doc.get("gt_mask"),
            detection_boxes=tuple(doc.get("detection_boxes", ())),
            variants=tuple(VariantEntry.from_dict(v) for v in doc.get("variants", ())),
            status=doc.get("status", "ingested"),
            quarantine_reason=doc.get("quarantine_reason"),
        )


def ingest_voc(root_dir, taxonomy: ClassTaxonomy, split: str = "train") -> list[DatasetRecord]:
    """Read a VOC-layout corpus into records.

    Layout: root/JPEGImages/*.jpg|png, root/SegmentationClass/*.png,
    root/ImageSets/Segmentation/<split>.txt. Class ids come from the
    annotation mask when present.
    """
    root = Path(root_dir)
    list_file = root / "ImageSets" / "Segmentation" / f"{split}.txt"
    if not list_file.exists():
        raise MissingFile(f"image list not found: {list_file}")
    records = []
    for name in list_file.read_text().split():
        image_path = None
        for ext in (".jpg", ".jpeg", ".png"):
            candidate = root / "JPEGImages" / f"{name}{ext}"
            if candidate.exists():
                image_path = candidate
                break
        if image_path is None:
            raise MissingFile(f"listed image {name!r} not found under {root / 'JPEGImages'}")
        mask_path = root / "SegmentationClass" / f"{name}.png"
        class_ids: tuple[int, ...] = ()
        gt_mask = None
        if mask_path.exists():
            mask = decode_mask(mask_path.read_bytes())
            class_ids = tuple(mask.class_ids_present())
            gt_mask = str(mask_path.relative_to(root))
        records.append(
            DatasetRecord(
                record_id=name,
                source_image_path=str(image_path.relative_to(root)),
                class_ids=class_ids,
                gt_mask_path=gt_mask,
            )
        )
    return records


def write_manifest(records, path) -> None:
    """Write a full manifest: header line, then one sorted record per line."""
    path = Path(path)
    header = json.dumps({"schema": MANIFEST_SCHEMA, "version": MANIFEST_VERSION}, sort_keys=True)
    lines = [header]
    for record in sorted(records, key=lambda r: r.record_id):
        lines.append(json.dumps(record.to_dict(), sort_keys=True))
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list[DatasetRecord]:
    """Read a manifest; later lines for the same record_id win (append-safe)."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise VersionError("manifest is empty (missing header)")
    header = json.loads(lines[0])
    if header.get("schema") != MANIFEST_SCHEMA or header.get("version") != MANIFEST_VERSION:
        raise VersionError(f"unsupported manifest header: {header}")
    by_id: dict[str, DatasetRecord] = {}
    for line in lines[1:]:
        record = DatasetRecord.from_dict(json.loads(line))
        by_id[record.record_id] = record
    return sorted(by_id.values(), key=lambda r: r.record_id)


class ManifestAppender:
    """Single-writer append channel used for per-stage checkpointing."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            header = json.dumps({"schema": MANIFEST_SCHEMA, "version": MANIFEST_VERSION}, sort_keys=True)
            self.path.write_text(header + "\n")

    def append(self, record: DatasetRecord) -> None:
        with self.path.open("a") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def assemble_dataset(manifest_path, out_dir, taxonomy: ClassTaxonomy, include: str = "kept_only") -> dict:
    """Emit images/, masks/, prompts.jsonl and index.json for a manifest.

    Returns summary counts: emitted pairs, kept/rejected tallies and per-class
    pixel counts over the emitted masks.
    """
    if include not in ("kept_only", "all"):
        raise ValueError(f"unknown include mode {include!r}")
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    base = manifest_path.parent
    out = Path(out_dir)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
        (out / "masks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output tree under {out}: {exc}") from exc

    pixel_counts: dict[int, int] = {}
    emitted = kept = rejected = skipped = 0
    prompt_lines = []
    index_entries = []
    for record in records:
        for variant in record.variants:
            sel = variant.selection
            if sel is None:
                continue
            if sel.decision is Decision.KEPT:
                kept += 1
            elif sel.decision is Decision.SKIPPED:
                skipped += 1
            else:
                rejected += 1
            emit = include == "all" or sel.decision is Decision.KEPT
            if not emit or variant.image_path is None:
                continue
            if record.pseudo_mask_path is None:
                raise InconsistentManifest(f"record {record.record_id} kept variants but no pseudo-mask")
            src_image = base / variant.image_path
            src_mask = base / record.pseudo_mask_path
            if not src_image.exists() or not src_mask.exists():
                raise InconsistentManifest(
                    f"record {record.record_id} variant {variant.variant_index}: artifact missing on disk"
                )
            stem = f"{record.record_id}_{variant.variant_index:02d}"
            try:
                (out / "images" / f"{stem}.png").write_bytes(src_image.read_bytes())
                mask = decode_mask(src_mask.read_bytes())
                (out / "masks" / f"{stem}.png").write_bytes(encode_mask(mask, taxonomy))
            except OSError as exc:
                raise IoFailure(f"failed writing {stem}: {exc}") from exc
            for cid, count in zip(*np.unique(mask.values, return_counts=True)):
                pixel_counts[int(cid)] = pixel_counts.get(int(cid), 0) + int(count)
            prompt_lines.append(json.dumps(
                {"id": stem, "record_id": record.record_id, "j": variant.variant_index,
                 "prompt": record.composed_prompt, "caption": record.caption},
                sort_keys=True))
            index_entries.append({"id": stem, "image": f"images/{stem}.png", "mask": f"masks/{stem}.png",
                                  "class_ids": list(record.class_ids)})
            emitted += 1

    (out / "prompts.jsonl").write_text("\n".join(prompt_lines) + ("\n" if prompt_lines else ""))
    summary = {
        "emitted": emitted,
        "kept": kept,
        "rejected": rejected,
        "skipped": skipped,
        "records": len(records),
        "per_class_pixels": {str(k): v for k, v in sorted(pixel_counts.items())},
    }
    index = {"include": include, "entries": index_entries, "summary": summary}
    (out / "index.json").write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    return summary
