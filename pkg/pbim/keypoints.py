"""FAST-9 segment-test corners on oriented multi-scale layers, restricted to the salient region."""
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import ArgumentError
from .filterbank import LayerStack
from .saliency import SalientMask

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dy, dx)
CIRCLE = (
    (-3, 0), (-3, 1), (-2, 2), (-1, 3), (0, 3), (1, 3), (2, 2), (3, 1),
    (3, 0), (3, -1), (2, -2), (1, -3), (0, -3), (-1, -3), (-2, -2), (-3, -1),
)
RADIUS = 3
ARC_LENGTH = 9
DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    score: float
    scale_index: int = -1
    theta: float = 0.0


def _circle_samples(values: np.ndarray) -> np.ndarray:
    """Circle pixels of every interior center, shape (16, H - 6, W - 6)."""
    h, w = values.shape
    return np.stack([
        values[RADIUS + dy:h - RADIUS + dy, RADIUS + dx:w - RADIUS + dx]
        for dy, dx in CIRCLE
    ])


def _arc_members(flags: np.ndarray) -> np.ndarray:
    """Marks circle positions covered by some run of ARC_LENGTH contiguous flags (with wrap)."""
    n = len(CIRCLE)
    members = np.zeros_like(flags)
    for start in range(n):
        run = np.ones(flags.shape[1:], dtype=bool)
        for k in range(ARC_LENGTH):
            run &= flags[(start + k) % n]
        for k in range(ARC_LENGTH):
            members[(start + k) % n] |= run
    return members


def segment_test_scores(values: np.ndarray, t: float) -> np.ndarray:
    """Segment-test score per pixel (0 where the test fails or within RADIUS of a border)."""
    h, w = values.shape
    center = values[RADIUS:h - RADIUS, RADIUS:w - RADIUS]
    circle = _circle_samples(values)
    brighter = _arc_members(circle > center + t)
    darker = _arc_members(circle < center - t)
    members = brighter | darker
    diff = np.abs(circle - center)
    score = np.zeros_like(center)
    # accumulate in circle order so scores are reproducible term by term
    for k in range(len(CIRCLE)):
        score = score + np.where(members[k], diff[k], 0.0)
    full = np.zeros_like(values, dtype=np.float64)
    full[RADIUS:h - RADIUS, RADIUS:w - RADIUS] = score
    return full


def fast_detect(values: np.ndarray, t: float = DEFAULT_THRESHOLD) -> List[Keypoint]:
    """
    FAST-9 corners with 3×3 non-maximum suppression.

    A pixel is a corner when at least 9 contiguous circle pixels are all brighter than
    center + t or all darker than center − t. Its score is the sum of
    |circle − center| over the circle pixels lying on a qualifying arc. A corner
    survives suppression when no 8-neighbor scores higher.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2 * RADIUS + 1 or values.shape[1] < 2 * RADIUS + 1:
        raise ArgumentError(f"FAST needs a map of at least 7x7, got {values.shape}")
    if not t > 0:
        raise ArgumentError(f"FAST threshold must be positive, got {t}")
    scores = segment_test_scores(values, t)
    peaks = (scores > 0) & (scores >= maximum_filter(scores, size=3, mode="constant", cval=0.0))
    ys, xs = np.nonzero(peaks)
    return [Keypoint(int(x), int(y), float(scores[y, x])) for y, x in zip(ys, xs)]


def normalize_layer(layer: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant layer maps to zeros."""
    lo, hi = float(layer.min()), float(layer.max())
    if hi <= lo:
        return np.zeros_like(layer, dtype=np.float64)
    return (layer - lo) / (hi - lo)


def resize_mask_nearest(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    if mask.shape == (height, width):
        return mask
    rows = np.minimum((np.arange(height) + 0.5) * mask.shape[0] / height, mask.shape[0] - 1).astype(int)
    cols = np.minimum((np.arange(width) + 0.5) * mask.shape[1] / width, mask.shape[1] - 1).astype(int)
    return mask[np.ix_(rows, cols)]


def multiscale_keypoints(layers: LayerStack, mask: SalientMask,
                         t: float = DEFAULT_THRESHOLD) -> List[Keypoint]:
    """
    FAST on every (scale, orientation) layer, kept only inside the salient mask.
    Ordered by scale, orientation, then score descending (ties by row, column).
    """
    if mask.source and layers.source and mask.source != layers.source:
        raise ArgumentError("Layer stack and salient mask come from different images")
    height, width = layers.shape
    region = resize_mask_nearest(mask.mask, height, width)
    found = []
    for si, oi, theta, layer in layers:
        hits = [kp for kp in fast_detect(normalize_layer(layer), t) if region[kp.y, kp.x]]
        hits.sort(key=lambda kp: (-kp.score, kp.y, kp.x))
        found.extend(Keypoint(kp.x, kp.y, kp.score, si, theta) for kp in hits)
    return found
