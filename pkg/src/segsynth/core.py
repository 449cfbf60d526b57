"""Core domain types: RGB images, semantic masks, class taxonomy, palette PNG codec.

Masks follow the PASCAL VOC conventions: background is class 0, the ignore
index is 255, and masks persist as palette-indexed PNGs so standard VOC
tooling can read them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeFailure, EncodeFailure, UnknownClass

IGNORE_INDEX = 255

# VOC renders the ignore region in this off-white color.
IGNORE_RGB = (224, 224, 192)


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Immutable 8-bit RGB image, row-major (H, W, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.uint8))
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash(self.digest())

    def digest(self) -> str:
        """Content hash; used by mock backends to key fixtures."""
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:".encode())
        h.update(self.pixels.tobytes())
        return h.hexdigest()

    def to_png_bytes(self) -> bytes:
        buf = BytesIO()
        Image.fromarray(np.asarray(self.pixels)).save(buf, format="PNG")
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_png_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "RgbImage":
        try:
            with Image.open(BytesIO(data)) as img:
                return cls(np.asarray(img.convert("RGB")))
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise DecodeFailure(f"cannot decode image: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "RgbImage":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True, eq=False)
class SemanticMask:
    """Immutable per-pixel class-index map, row-major (H, W), uint8."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.uint8))
        if v.ndim != 2:
            raise ValueError(f"expected (H, W) array, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("mask must be at least 1x1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, SemanticMask) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def class_ids_present(self) -> list[int]:
        """Foreground class ids present in the mask (excludes 0 and ignore)."""
        present = np.unique(self.values)
        return [int(c) for c in present if c not in (0, IGNORE_INDEX)]


@dataclass(frozen=True)
class BBox:
    """Detection box in pixel coordinates, half-open convention not assumed."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float
    class_id: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def clamped(self, width: int, height: int) -> "BBox":
        return BBox(
            x_min=min(max(self.x_min, 0.0), width - 1),
            y_min=min(max(self.y_min, 0.0), height - 1),
            x_max=min(max(self.x_max, 1.0), float(width)),
            y_max=min(max(self.y_max, 1.0), float(height)),
            score=self.score,
            class_id=self.class_id,
        )

    def pixel_slice(self) -> tuple[slice, slice]:
        """Row/column slices covering the box, for rasterization."""
        x0, y0 = int(np.floor(self.x_min)), int(np.floor(self.y_min))
        x1, y1 = int(np.ceil(self.x_max)), int(np.ceil(self.y_max))
        return slice(y0, y1), slice(x0, x1)


class ClassTaxonomy:
    """Ordered class list with alias resolution and a display palette.

    Class ids are contiguous from 1; 0 is background. Names and aliases are
    case-insensitively unique across the whole taxonomy.
    """

    def __init__(self, classes, palette):
        # classes: iterable of (class_id, name, aliases); palette: id -> (r, g, b)
        entries = sorted(((int(i), str(n), tuple(a)) for i, n, a in classes))
        if not entries:
            raise ValueError("taxonomy must contain at least one class")
        ids = [i for i, _, _ in entries]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"class ids must be contiguous from 1, got {ids}")
        lookup: dict[str, int] = {}
        for cid, name, aliases in entries:
            for key in (name, *aliases):
                norm = key.strip().lower()
                if norm in lookup:
                    raise ValueError(f"duplicate class name/alias {key!r}")
                lookup[norm] = cid
        palette = {int(k): tuple(int(c) for c in v) for k, v in dict(palette).items()}
        missing = [i for i in (0, *ids) if i not in palette]
        if missing:
            raise ValueError(f"palette missing entries for ids {missing}")
        self._entries = entries
        self._lookup = lookup
        self._palette = palette
        self._names = {cid: name for cid, name, _ in entries}

    @property
    def class_ids(self) -> list[int]:
        return [cid for cid, _, _ in self._entries]

    @property
    def num_classes(self) -> int:
        """Number of foreground classes (background excluded)."""
        return len(self._entries)

    def name_of(self, class_id: int) -> str:
        try:
            return self._names[int(class_id)]
        except KeyError:
            raise UnknownClass(f"no class with id {class_id}") from None

    def color_of(self, class_id: int) -> tuple[int, int, int]:
        try:
            return self._palette[int(class_id)]
        except KeyError:
            raise UnknownClass(f"no palette entry for id {class_id}") from None

    def resolve(self, name: str) -> int:
        """Alias-aware lookup: exact canonical, exact alias, then s-stripped retry."""
        norm = name.strip().lower()
        if norm in self._lookup:
            return self._lookup[norm]
        if norm.endswith("s") and norm[:-1] in self._lookup:
            return self._lookup[norm[:-1]]
        raise UnknownClass(f"unknown class name {name!r}")

    def palette_flat(self) -> list[int]:
        """768-entry flat RGB palette for PIL, ignore index at 255."""
        flat = [0] * 768
        for cid, rgb in self._palette.items():
            flat[cid * 3 : cid * 3 + 3] = rgb
        flat[IGNORE_INDEX * 3 : IGNORE_INDEX * 3 + 3] = IGNORE_RGB
        return flat

    def to_dict(self) -> dict:
        return {
            "classes": [
                {"id": cid, "name": name, "aliases": list(aliases), "rgb": list(self._palette[cid])}
                for cid, name, aliases in self._entries
            ],
            "background_rgb": list(self._palette[0]),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassTaxonomy":
        classes = [(c["id"], c["name"], c.get("aliases", [])) for c in doc["classes"]]
        palette = {c["id"]: tuple(c["rgb"]) for c in doc["classes"]}
        palette[0] = tuple(doc.get("background_rgb", (0, 0, 0)))
        return cls(classes, palette)

    @classmethod
    def from_json_file(cls, path) -> "ClassTaxonomy":
        return cls.from_dict(json.loads(Path(path).read_text()))


def canonicalize_class(name: str, taxonomy: ClassTaxonomy) -> int:
    """Resolve a free-form class name ("bicycles", "table") to a class id."""
    return taxonomy.resolve(name)


def encode_mask(mask: SemanticMask, taxonomy: ClassTaxonomy) -> bytes:
    """Serialize a mask as a palette-indexed PNG; decoding recovers it exactly."""
    values = mask.values
    max_id = taxonomy.num_classes
    bad = (values > max_id) & (values != IGNORE_INDEX)
    if bad.any():
        offenders = sorted(int(v) for v in np.unique(values[bad]))
        raise EncodeFailure(f"mask contains non-taxonomy values {offenders}")
    img = Image.fromarray(np.asarray(values), mode="P")
    img.putpalette(taxonomy.palette_flat())
    buf = BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_mask(data: bytes) -> SemanticMask:
    """Read a palette-indexed PNG back into a SemanticMask."""
    try:
        with Image.open(BytesIO(data)) as img:
            if img.mode != "P":
                raise DecodeFailure(f"expected palette-indexed PNG, got mode {img.mode}")
            img.load()
            return SemanticMask(np.asarray(img, dtype=np.uint8))
    except DecodeFailure:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeFailure(f"cannot decode mask: {exc}") from exc


# PASCAL VOC 2012: 20 classes and the standard bit-reversal palette.
_VOC_CLASSES = (
    ("aeroplane", ("airplane", "plane", "aircraft")),
    ("bicycle", ("bike",)),
    ("bird", ()),
    ("boat", ("ship",)),
    ("bottle", ()),
    ("bus", ()),
    ("car", ("automobile",)),
    ("cat", ()),
    ("chair", ()),
    ("cow", ()),
    ("diningtable", ("dining table", "table")),
    ("dog", ()),
    ("horse", ()),
    ("motorbike", ("motorcycle",)),
    ("person", ("people", "man", "woman")),
    ("pottedplant", ("potted plant", "houseplant")),
    ("sheep", ()),
    ("sofa", ("couch",)),
    ("train", ()),
    ("tvmonitor", ("tv", "television", "monitor")),
)


def _voc_color(index: int) -> tuple[int, int, int]:
    r = g = b = 0
    cid = index
    for shift in range(8):
        r |= ((cid >> 0) & 1) << (7 - shift)
        g |= ((cid >> 1) & 1) << (7 - shift)
        b |= ((cid >> 2) & 1) << (7 - shift)
        cid >>= 3
    return r, g, b


def voc_taxonomy() -> ClassTaxonomy:
    classes = [(i + 1, name, aliases) for i, (name, aliases) in enumerate(_VOC_CLASSES)]
    palette = {i: _voc_color(i) for i in range(len(_VOC_CLASSES) + 1)}
    return ClassTaxonomy(classes, palette)
