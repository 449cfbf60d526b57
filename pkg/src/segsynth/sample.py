"""Balanced real/synthetic batch planning and few-shot fold construction.

Each batch slot draws a real image index uniformly, then is filled by one of
its kept synthetic variants with probability alpha (uniform over variants) or
by the real image otherwise. Slot draws are counter-based, so plans are fully
determined by (inputs, alpha, seed) regardless of execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ._rng import SlotStream
from .errors import EmptyDataset, InvalidAlpha, NotDivisible


@dataclass(frozen=True)
class Slot:
    kind: str  # "real" | "synthetic"
    record_id: str
    variant_index: int | None = None


@dataclass(frozen=True)
class BatchPlan:
    batches: tuple[tuple[Slot, ...], ...]
    alpha: float
    seed: int

    def slots(self):
        for batch in self.batches:
            yield from batch

    def synthetic_fraction(self) -> float:
        slots = list(self.slots())
        return sum(1 for s in slots if s.kind == "synthetic") / len(slots)

    def write_jsonl(self, path) -> None:
        lines = []
        for l, batch in enumerate(self.batches):
            for s, slot in enumerate(batch):
                lines.append(json.dumps(
                    {"batch": l, "slot": s, "kind": slot.kind,
                     "i": slot.record_id, "j": slot.variant_index},
                    sort_keys=True))
        Path(path).write_text("\n".join(lines) + "\n")


def plan_batches(
    real_ids: list[str],
    synth_index: dict[str, list[int]],
    alpha: float,
    batch_size: int,
    num_batches: int,
    seed: int,
) -> BatchPlan:
    """Deterministic batch plan per the alpha-mixing rule.

    Records with no kept variants are forced real regardless of the draw.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha {alpha} outside [0, 1]")
    if not real_ids:
        raise EmptyDataset("no real records to sample from")
    if batch_size < 1 or num_batches < 1:
        raise ValueError("batch_size and num_batches must be >= 1")
    ids = list(real_ids)
    batches = []
    counter = 0
    for _ in range(num_batches):
        batch = []
        for _ in range(batch_size):
            stream = SlotStream(seed, counter)
            counter += 1
            i = ids[stream.next_below(len(ids))]
            kept = synth_index.get(i, [])
            take_synthetic = stream.next_unit() < alpha and kept
            if take_synthetic:
                j = kept[stream.next_below(len(kept))]
                batch.append(Slot(kind="synthetic", record_id=i, variant_index=j))
            else:
                batch.append(Slot(kind="real", record_id=i))
        batches.append(tuple(batch))
    return BatchPlan(batches=tuple(batches), alpha=alpha, seed=seed)


@dataclass(frozen=True)
class FoldSplit:
    folds: tuple[tuple[int, ...], ...]

    @property
    def num_folds(self) -> int:
        return len(self.folds)

    def classes_of(self, fold_id: int) -> tuple[int, ...]:
        return self.folds[fold_id]


def split_folds(class_ids: list[int], num_folds: int) -> FoldSplit:
    """Contiguous equal-size slices of the class list, in id order."""
    ids = list(class_ids)
    if num_folds < 1:
        raise ValueError("num_folds must be >= 1")
    if len(ids) % num_folds != 0:
        raise NotDivisible(f"{len(ids)} classes do not divide into {num_folds} folds")
    size = len(ids) // num_folds
    folds = tuple(tuple(ids[f * size : (f + 1) * size]) for f in range(num_folds))
    return FoldSplit(folds=folds)


def filter_by_fold(records, fold: FoldSplit, fold_id: int, mode: str):
    """Cross-validation filtering.

    ``train_exclude_fold`` drops records whose class set touches the held-out
    fold; ``test_only_fold`` keeps exactly those.
    """
    if mode not in ("train_exclude_fold", "test_only_fold"):
        raise ValueError(f"unknown mode {mode!r}")
    held_out = set(fold.classes_of(fold_id))
    if mode == "train_exclude_fold":
        return [r for r in records if not held_out & set(r.class_ids)]
    return [r for r in records if held_out & set(r.class_ids)]
