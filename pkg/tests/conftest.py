import numpy as np
import pytest

from segsynth import RgbImage, SemanticMask, voc_taxonomy
from segsynth.backends import MockBackendSuite, MockFixtures


@pytest.fixture(scope="session")
def taxonomy():
    return voc_taxonomy()


def render_scene(mask: SemanticMask, taxonomy, noise_seed: int, noise_amplitude: int = 12) -> RgbImage:
    """A 'real' image for tests: palette rendering of the mask plus mild noise.

    Keeps real images close to control images, so mock embeddings/cosines
    behave like the real pipeline's.
    """
    table = np.zeros((256, 3), dtype=np.int16)
    for cid in (0, *taxonomy.class_ids):
        table[cid] = taxonomy.color_of(cid)
    rgb = table[mask.values]
    rng = np.random.default_rng(noise_seed)
    noise = rng.integers(-noise_amplitude, noise_amplitude + 1, size=rgb.shape)
    return RgbImage(np.clip(rgb + noise, 0, 255).astype(np.uint8))


def rect_mask(height, width, rects) -> SemanticMask:
    """rects: list of (class_id, y0, y1, x0, x1)."""
    values = np.zeros((height, width), dtype=np.uint8)
    for cid, y0, y1, x0, x1 in rects:
        values[y0:y1, x0:x1] = cid
    return SemanticMask(values)


def make_voc_corpus(root, taxonomy, specs, split="train", size=48):
    """Build a VOC-layout corpus on disk.

    specs: dict record_id -> list of (class_id, y0, y1, x0, x1).
    Returns dict record_id -> (image, mask).
    """
    from segsynth import encode_mask

    (root / "JPEGImages").mkdir(parents=True)
    (root / "SegmentationClass").mkdir(parents=True)
    sets = root / "ImageSets" / "Segmentation"
    sets.mkdir(parents=True)
    sets.joinpath(f"{split}.txt").write_text("\n".join(sorted(specs)) + "\n")
    built = {}
    for idx, (record_id, rects) in enumerate(sorted(specs.items())):
        mask = rect_mask(size, size, rects)
        image = render_scene(mask, taxonomy, noise_seed=1000 + idx)
        image.save(root / "JPEGImages" / f"{record_id}.png")
        (root / "SegmentationClass" / f"{record_id}.png").write_bytes(encode_mask(mask, taxonomy))
        built[record_id] = (image, mask)
    return built


# Class pairs whose palette colors differ by >= 128 in some channel, and
# whose colors have a channel >= 128, so the mock color matcher cannot
# confuse them with each other or with noisy background.
SAFE_CLASS_PAIRS = (
    (1, 6), (2, 5), (3, 4), (7,), (9, 20),
    (11, 12), (13, 2), (15, 4), (17, 6), (19, 4),
)


def default_corpus_specs(n=3):
    """n records, 1-2 rectangle objects each, over color-separated classes."""
    specs = {}
    for i in range(n):
        classes = SAFE_CLASS_PAIRS[i % len(SAFE_CLASS_PAIRS)]
        rects = [(classes[0], 4, 20, 4, 24)]
        if i % 2 == 0 and len(classes) > 1:
            rects.append((classes[1], 26, 44, 20, 44))
        specs[f"img{i:03d}"] = rects
    return specs


@pytest.fixture
def mock_suite(taxonomy):
    return MockBackendSuite(fixtures=MockFixtures(), taxonomy=taxonomy)
