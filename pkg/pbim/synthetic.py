"""
Synthetic two-class dataset: a striped glyph on cluttered background versus
clutter alone. Used by the end-to-end benchmark and the test suite.
"""
import math
import os
from typing import Callable, Optional

import numpy as np
from scipy.ndimage import gaussian_filter
from skimage.draw import disk, line, polygon
from skimage.io import imsave

from .errors import ArgumentError
from .tools.dataset import BACKGROUND, Dataset, scan_dataset

GLYPH_CLASS = "glyph"


def _rng(seed: int, class_index: int, image_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, class_index, image_index]))


def clutter(rng: np.random.Generator, size: int) -> np.ndarray:
    """Smoothed noise with a few low-contrast bars and blobs, values in [0.2, 0.6]."""
    noise = gaussian_filter(rng.random((size, size)), sigma=1.5)
    noise = (noise - noise.min()) / max(noise.max() - noise.min(), 1e-12)
    canvas = 0.3 + 0.2 * noise
    for _ in range(int(rng.integers(3, 7))):
        r0, c0, r1, c1 = (int(v) for v in rng.integers(0, size, 4))
        rr, cc = line(r0, c0, r1, c1)
        canvas[rr, cc] = rng.uniform(0.2, 0.6)
    for _ in range(int(rng.integers(1, 4))):
        center = tuple(int(v) for v in rng.integers(0, size, 2))
        rr, cc = disk(center, float(rng.uniform(1.5, 4.0)), shape=canvas.shape)
        canvas[rr, cc] = rng.uniform(0.2, 0.6)
    return np.clip(canvas, 0.0, 1.0)


def stamp_glyph(canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Paint a high-contrast striped plus sign at a random place, scale and stripe angle."""
    size = canvas.shape[0]
    arm = int(rng.integers(size // 8, size // 5 + 1))
    width = max(arm // 2, 3)
    cy, cx = (int(v) for v in rng.integers(arm + 2, size - arm - 2, 2))
    theta = float(rng.uniform(0.0, math.pi))
    yy, xx = np.mgrid[0:size, 0:size]
    stripes = 0.5 + 0.5 * np.sin(2 * math.pi * (xx * math.cos(theta) + yy * math.sin(theta)) / 4.0)
    out = canvas.copy()
    for rows, cols in (
        ([cy - width // 2, cy - width // 2, cy + width // 2, cy + width // 2],
         [cx - arm, cx + arm, cx + arm, cx - arm]),
        ([cy - arm, cy - arm, cy + arm, cy + arm],
         [cx - width // 2, cx + width // 2, cx + width // 2, cx - width // 2]),
    ):
        rr, cc = polygon(rows, cols, shape=out.shape)
        out[rr, cc] = 0.05 + 0.9 * stripes[rr, cc]
    return out


def make_synthetic_dataset(root: str, n_per_class: int = 65, size: int = 64, seed: int = 0,
                           log: Optional[Callable] = None) -> Dataset:
    """
    Write root/glyph/*.png and root/background/*.png, n_per_class images each.

    Same (n_per_class, size, seed) always yields byte-identical files.
    """
    if n_per_class < 1:
        raise ArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if size < 40:
        raise ArgumentError(f"Synthetic images need size >= 40 to host the filter bank, got {size}")
    for class_index, name in enumerate((GLYPH_CLASS, BACKGROUND)):
        directory = os.path.join(root, name)
        os.makedirs(directory, exist_ok=True)
        for i in range(n_per_class):
            rng = _rng(seed, class_index, i)
            pixels = clutter(rng, size)
            if name == GLYPH_CLASS:
                pixels = stamp_glyph(pixels, rng)
            imsave(os.path.join(directory, f"{i:03d}.png"),
                   np.rint(pixels * 255.0).astype(np.uint8), check_contrast=False)
    if log:
        log("save", f"💾 Wrote {2 * n_per_class} synthetic {size}x{size} images to {root}")
    return scan_dataset(root)
