"""Walkthrough: deterministic real/synthetic batch mixing and class folds.

Each training slot draws a real image with probability 1 - alpha and a kept
synthetic variant with probability alpha. Slots are seeded independently by
(seed, slot counter), so the plan is reproducible and independent of
iteration order. Also shows contiguous class folds for cross-validation.
"""

from segsynth import plan_batches, split_folds

real_ids = [f"img{i:03d}" for i in range(12)]
# pretend selection kept 2-4 variants per image
kept_variants = {rid: list(range(2 + (i % 3))) for i, rid in enumerate(real_ids)}

for alpha in (0.0, 0.4, 0.5, 1.0):
    plan = plan_batches(real_ids, kept_variants, alpha=alpha,
                        batch_size=16, num_batches=500, seed=7)
    print(f"alpha={alpha:.1f}: synthetic fraction over 8000 slots = "
          f"{plan.synthetic_fraction():.4f}")

plan = plan_batches(real_ids, kept_variants, alpha=0.5, batch_size=4, num_batches=2, seed=7)
print("\nfirst two batches:")
for b, batch in enumerate(plan.batches):
    for s, slot in enumerate(batch):
        ref = slot.record_id if slot.kind == "real" else f"{slot.record_id}/variant{slot.variant_index}"
        print(f"  batch {b} slot {s}: {slot.kind:9s} {ref}")

print("\n20 classes in 4 folds:")
split = split_folds(list(range(1, 21)), num_folds=4)
for i, fold in enumerate(split.folds):
    print(f"  fold {i}: classes {list(fold)}")
