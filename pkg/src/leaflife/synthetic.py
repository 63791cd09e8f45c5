"""Procedural fixture corpus for tests and demos.

Generates a tiny class-per-folder image tree whose classes have clearly
different color/texture statistics, so a frozen-backbone head can separate
them without any real data. Generation is fully seeded: the same arguments
always produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_CLASSES = ("blotch", "healthy", "rust")


def _leaf_base(rng: np.random.Generator, size: int) -> np.ndarray:
    """Soft green background with a diagonal illumination gradient."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    base = np.zeros((size, size, 3), dtype=np.float32)
    base[..., 0] = 40 + 30 * xx
    base[..., 1] = 120 + 60 * yy + rng.normal(0, 4, (size, size))
    base[..., 2] = 35 + 20 * xx * yy
    return base


def _paint_blotch(rng: np.random.Generator, img: np.ndarray) -> None:
    """Dark near-black circular lesions, the 'spots' a saliency map should find."""
    size = img.shape[0]
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(rng.integers(4, 8)):
        cy, cx = rng.integers(20, size - 20, size=2)
        radius = rng.integers(8, 22)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
        img[mask] = [25, 18, 12]


def _paint_rust(rng: np.random.Generator, img: np.ndarray) -> None:
    """Orange speckle covering a band of the leaf."""
    size = img.shape[0]
    speckle = rng.random((size, size)) < 0.18
    band = np.zeros((size, size), dtype=bool)
    lo = rng.integers(0, size // 2)
    band[lo : lo + size // 2, :] = True
    mask = speckle & band
    img[mask] = [200, 110, 30]


def _paint_healthy(rng: np.random.Generator, img: np.ndarray) -> None:
    """Faint vein structure only; stays uniformly green."""
    size = img.shape[0]
    for k in range(3, size, size // 8):
        img[:, k : k + 1, 1] += 12


def generate_corpus(
    root: "Path | str",
    classes: tuple[str, ...] = DEFAULT_CLASSES,
    per_class: int = 10,
    size: int = 256,
    seed: int = 7,
) -> Path:
    """Write ``per_class`` PNGs for each class under ``root`` and return ``root``."""
    painters = {
        "blotch": _paint_blotch,
        "healthy": _paint_healthy,
        "rust": _paint_rust,
    }
    root = Path(root)
    rng = np.random.default_rng(seed)
    for class_name in classes:
        class_dir = root / class_name
        class_dir.mkdir(parents=True, exist_ok=True)
        paint = painters.get(class_name, _paint_healthy)
        for i in range(per_class):
            img = _leaf_base(rng, size)
            paint(rng, img)
            arr = np.clip(img, 0, 255).astype(np.uint8)
            Image.fromarray(arr).save(class_dir / f"{class_name}_{i:03d}.png")
    return root
