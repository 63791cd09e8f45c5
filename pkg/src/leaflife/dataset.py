"""Dataset ingestion, deterministic stratified splitting, and image preprocessing.

Expected corpus layout is one directory per class::

    root/
        Black Measles/
            img001.jpg
            ...
        Black Rot/
            ...

Class order is always alphabetical, and every downstream consumer (training,
evaluation, serving) relies on that canonical order.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    EmptyDatasetError,
    InvalidRatiosError,
    NotFoundError,
)

logger = logging.getLogger(__name__)

IMAGE_SIZE = 224
IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}


class Subset(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class PreprocessingMode(str, Enum):
    """Pixel scaling applied after the resize.

    SCALE_SYMMETRIC maps byte v -> v/127.5 - 1, the [-1, 1] convention the
    two supported backbones expect. SCALE_UNIT maps v -> v/255, the [0, 1]
    space in which adversarial budgets are expressed.
    """

    SCALE_SYMMETRIC = "scale_symmetric"
    SCALE_UNIT = "scale_unit"

    @property
    def value_range(self) -> tuple[float, float]:
        if self is PreprocessingMode.SCALE_SYMMETRIC:
            return (-1.0, 1.0)
        return (0.0, 1.0)


def coerce_mode(mode: "PreprocessingMode | str") -> PreprocessingMode:
    if isinstance(mode, PreprocessingMode):
        return mode
    return PreprocessingMode(str(mode).lower())


@dataclass(frozen=True)
class DatasetManifest:
    """Ground-truth inventory of a class-per-folder image corpus."""

    root_path: Path
    classes: tuple[str, ...]
    entries: tuple[tuple[str, int], ...]
    counts: dict[str, int]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.counts.values()):
            raise ValueError("manifest total disagrees with per-class counts")
        if list(self.classes) != sorted(set(self.classes)):
            raise ValueError("manifest classes must be sorted and duplicate-free")
        paths = [p for p, _ in self.entries]
        if len(paths) != len(set(paths)):
            raise ValueError("manifest entries contain duplicate paths")
        for _, idx in self.entries:
            if not 0 <= idx < len(self.classes):
                raise ValueError(f"class index {idx} out of range")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def paths_for_class(self, class_index: int) -> list[str]:
        return [p for p, i in self.entries if i == class_index]

    def label_of(self, relative_path: str) -> int:
        return self._label_map()[relative_path]

    def _label_map(self) -> dict[str, int]:
        cached = getattr(self, "_label_map_cache", None)
        if cached is None:
            cached = dict(self.entries)
            object.__setattr__(self, "_label_map_cache", cached)
        return cached

    def to_json(self) -> dict:
        return {
            "classes": list(self.classes),
            "counts": dict(self.counts),
            "entries": [[p, i] for p, i in self.entries],
            "total": self.total,
        }

    @classmethod
    def from_json(cls, payload: Mapping, root_path: "Path | str") -> "DatasetManifest":
        return cls(
            root_path=Path(root_path),
            classes=tuple(payload["classes"]),
            entries=tuple((p, int(i)) for p, i in payload["entries"]),
            counts={k: int(v) for k, v in payload["counts"].items()},
            total=int(payload["total"]),
        )

    def save(self, path: "Path | str") -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: "Path | str", root_path: "Path | str | None" = None) -> "DatasetManifest":
        path = Path(path)
        payload = json.loads(path.read_text())
        return cls.from_json(payload, root_path if root_path is not None else path.parent)


def scan_dataset(root_path: "Path | str") -> DatasetManifest:
    """Walk ``root_path`` and build the manifest.

    Immediate subdirectories are classes (sorted alphabetically); files with
    unrecognized extensions are skipped and counted in a warning.
    """
    root = Path(root_path)
    if not root.exists():
        raise NotFoundError(f"dataset root does not exist: {root}")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise EmptyDatasetError(f"no class directories under {root}")

    classes = tuple(d.name for d in class_dirs)
    entries: list[tuple[str, int]] = []
    counts: dict[str, int] = {}
    ignored = 0
    for index, class_dir in enumerate(class_dirs):
        files = sorted(f.name for f in class_dir.iterdir() if f.is_file())
        kept = [f for f in files if Path(f).suffix.lower() in IMAGE_EXTENSIONS]
        ignored += len(files) - len(kept)
        counts[class_dir.name] = len(kept)
        entries.extend((f"{class_dir.name}/{name}", index) for name in kept)

    if ignored:
        logger.warning("ignored %d non-image files under %s", ignored, root)
    if not entries:
        raise EmptyDatasetError(f"no images found under {root}")
    return DatasetManifest(
        root_path=root,
        classes=classes,
        entries=tuple(entries),
        counts=counts,
        total=len(entries),
    )


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic train/val/test assignment for every manifest entry."""

    seed: int
    ratios: tuple[float, float, float]
    assignment: dict[str, Subset]

    def subset_paths(self, manifest: DatasetManifest, subset: Subset) -> list[str]:
        """Paths of one subset, in manifest order (the deterministic batch order)."""
        return [p for p, _ in manifest.entries if self.assignment[p] is subset]

    def subset_items(self, manifest: DatasetManifest, subset: Subset) -> list[tuple[str, int]]:
        return [(p, i) for p, i in manifest.entries if self.assignment[p] is subset]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "assignment": {p: s.value for p, s in self.assignment.items()},
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "SplitAssignment":
        return cls(
            seed=int(payload["seed"]),
            ratios=tuple(float(r) for r in payload["ratios"]),
            assignment={p: Subset(s) for p, s in payload["assignment"].items()},
        )

    def save(self, path: "Path | str") -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: "Path | str") -> "SplitAssignment":
        return cls.from_json(json.loads(Path(path).read_text()))


def stratified_split(
    manifest: DatasetManifest,
    ratios: Sequence[float] = (0.70, 0.20, 0.10),
    seed: int = 42,
) -> SplitAssignment:
    """Split each class independently into train/val/test by ``ratios``.

    Per class, subset sizes are floor(ratio * n); leftover images go to
    train, then val, then test. Shuffling uses a generator seeded with
    ``seed``, so the same inputs always produce the same assignment.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise InvalidRatiosError(f"ratios must be three nonnegative fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatiosError(f"ratios must sum to 1.0, got {sum(ratios)!r}")

    rng = np.random.default_rng(seed)
    assignment: dict[str, Subset] = {}
    for class_index, class_name in enumerate(manifest.classes):
        paths = manifest.paths_for_class(class_index)
        order = rng.permutation(len(paths))
        shuffled = [paths[i] for i in order]
        n = len(shuffled)
        sizes = [math.floor(r * n) for r in ratios]
        remainder = n - sum(sizes)
        for bump in range(remainder):  # leftovers: train first, then val, then test
            sizes[bump] += 1
        for ratio, subset, count in zip(ratios, Subset, sizes):
            if count == 0 and ratio > 0 and n > 0:
                logger.warning(
                    "class %r has too few images (%d) to populate subset %s",
                    class_name, n, subset.value,
                )
        bounds = np.cumsum([0] + sizes)
        for subset, lo, hi in zip(Subset, bounds[:-1], bounds[1:]):
            for p in shuffled[lo:hi]:
                assignment[p] = subset

    return SplitAssignment(seed=seed, ratios=ratios, assignment=assignment)


@dataclass
class PreprocessedImage:
    """A model-ready 224x224x3 float array plus its provenance."""

    pixels: np.ndarray
    value_range: tuple[float, float]
    mode: PreprocessingMode
    source_path: "Path | None" = None

    def __post_init__(self) -> None:
        if self.pixels.shape[:2] != (IMAGE_SIZE, IMAGE_SIZE) or self.pixels.shape[2] != 3:
            raise ValueError(f"expected {IMAGE_SIZE}x{IMAGE_SIZE}x3 pixels, got {self.pixels.shape}")


def preprocess_pil(
    image: Image.Image,
    mode: "PreprocessingMode | str" = PreprocessingMode.SCALE_SYMMETRIC,
    source_path: "Path | None" = None,
) -> PreprocessedImage:
    """Resize an already-decoded PIL image and scale pixels per ``mode``."""
    mode = coerce_mode(mode)
    rgb = image.convert("RGB")
    if rgb.size != (IMAGE_SIZE, IMAGE_SIZE):
        rgb = rgb.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32)
    if mode is PreprocessingMode.SCALE_SYMMETRIC:
        arr = arr / 127.5 - 1.0
    else:
        arr = arr / 255.0
    return PreprocessedImage(
        pixels=arr, value_range=mode.value_range, mode=mode, source_path=source_path
    )


def load_and_preprocess(
    path: "Path | str",
    mode: "PreprocessingMode | str" = PreprocessingMode.SCALE_SYMMETRIC,
) -> PreprocessedImage:
    """Decode an image file to a model-ready array.

    Grayscale inputs are replicated to three channels. Undecodable or empty
    files raise DecodeError rather than being silently skipped.
    """
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"image does not exist: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            return preprocess_pil(img, mode, source_path=path)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc


def load_batch(
    root: "Path | str",
    relative_paths: Iterable[str],
    mode: "PreprocessingMode | str" = PreprocessingMode.SCALE_SYMMETRIC,
) -> np.ndarray:
    """Stack preprocessed images for the given manifest paths, in the order given."""
    root = Path(root)
    mode = coerce_mode(mode)
    images = [load_and_preprocess(root / rel, mode).pixels for rel in relative_paths]
    if not images:
        return np.zeros((0, IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float32)
    return np.stack(images)


def unit_to_symmetric(x: np.ndarray) -> np.ndarray:
    """Map [0, 1] pixels to the [-1, 1] space the backbones consume."""
    return x * 2.0 - 1.0


class ImageStore:
    """Loads unit-space images by manifest path, with an in-memory cache.

    Reentrant for concurrent readers; the cache threshold keeps full-scale
    corpora from exhausting memory while letting fixture-scale runs avoid
    repeated decodes.
    """

    def __init__(self, root: "Path | str", cache_limit: int = 4096):
        self.root = Path(root)
        self.cache_limit = cache_limit
        self._cache: dict[str, np.ndarray] = {}

    def get(self, relative_path: str) -> np.ndarray:
        cached = self._cache.get(relative_path)
        if cached is not None:
            return cached
        arr = load_and_preprocess(self.root / relative_path, PreprocessingMode.SCALE_UNIT).pixels
        if len(self._cache) < self.cache_limit:
            self._cache[relative_path] = arr
        return arr

    def batch(self, relative_paths: Sequence[str]) -> np.ndarray:
        if not relative_paths:
            return np.zeros((0, IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float32)
        return np.stack([self.get(p) for p in relative_paths])
