"""
HMAX upper layers — C1 scale-band max pooling, S2 Gaussian patch matching,
and C2 global-max features over a patch dictionary.
"""
import hashlib
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ArgumentError
from .filterbank import LayerStack

PATCH_SIZES = (4, 8, 12, 16)
ORIENTATION_COUNT = 4
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class Band:
    """One C1 band: the two S1 scales it pools, its pooling grid and stride (pixels)."""
    scales: Tuple[int, int]
    grid: int
    stride: int

    def __post_init__(self):
        if self.stride < 1 or self.grid < self.stride:
            raise ArgumentError(f"Band needs stride >= 1 and grid >= stride, got {self}")


@dataclass(frozen=True)
class BandSpec:
    bands: Tuple[Band, ...]

    @classmethod
    def default(cls) -> "BandSpec":
        """Eight bands; band b pools scales (2b, 2b+1) over a (8 + 2b)-pixel grid at half-grid stride."""
        return cls(tuple(Band((2 * b, 2 * b + 1), 8 + 2 * b, (8 + 2 * b) // 2) for b in range(8)))

    @classmethod
    def from_list(cls, rows: List[dict]) -> "BandSpec":
        return cls(tuple(Band(tuple(r["scales"]), int(r["grid"]), int(r["stride"])) for r in rows))

    def __len__(self):
        return len(self.bands)


@dataclass(frozen=True)
class C1Band:
    """Pooled maps of one band, shape (orientations, rows, cols)."""
    maps: np.ndarray
    band: Band

    @property
    def rows(self) -> int:
        return self.maps.shape[1]

    @property
    def cols(self) -> int:
        return self.maps.shape[2]

    def hosts(self, side: int) -> bool:
        return side <= self.rows and side <= self.cols

    def window(self, row: int, col: int, side: int) -> np.ndarray:
        return self.maps[:, row:row + side, col:col + side]


@dataclass(frozen=True)
class C1Stack:
    bands: Tuple[C1Band, ...]
    orientations: Tuple[float, ...]
    source: str = ""

    def __len__(self):
        return len(self.bands)


@dataclass(frozen=True)
class PatchOrigin:
    """Provenance of a dictionary patch; (x, y) is the image point the patch was taken around."""
    source: str
    band: int
    row: int
    col: int
    kind: str = "random"
    x: float = 0.0
    y: float = 0.0
    score: float = 0.0


@dataclass(frozen=True)
class Patch:
    """A C1 prototype of shape (orientations, side, side)."""
    values: np.ndarray
    origin: PatchOrigin

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ArgumentError(f"Patch values must be (orientations, n, n), got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def side(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Patch):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class PatchDictionary:
    """Ordered patch vocabulary; order is the feature order of every C2 vector."""
    patches: Tuple[Patch, ...]
    selector: str = "random"
    seed: int = 0
    config_fingerprint: str = ""
    fingerprint: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if not self.patches:
            raise ArgumentError("PatchDictionary must contain at least one patch")
        digest = hashlib.sha1()
        digest.update(f"{self.selector}|{self.seed}|{self.config_fingerprint}".encode())
        for p in self.patches:
            digest.update(repr(p.origin).encode())
            digest.update(p.values.tobytes())
        object.__setattr__(self, "fingerprint", digest.hexdigest())

    def __len__(self):
        return len(self.patches)

    def head(self, k: int) -> "PatchDictionary":
        """The first k patches as a dictionary of their own."""
        if not 1 <= k <= len(self.patches):
            raise ArgumentError(f"Cannot truncate a {len(self.patches)}-patch dictionary to {k}")
        return PatchDictionary(self.patches[:k], self.selector, self.seed, self.config_fingerprint)

    def provenance_counts(self) -> dict:
        counts = {}
        for p in self.patches:
            counts[p.origin.kind] = counts.get(p.origin.kind, 0) + 1
        return counts


@dataclass(frozen=True)
class MatchConfig:
    """S2 sharpness; None means 1 / (2 · n² · orientations) per patch of side n."""
    beta: Optional[float] = None

    def __post_init__(self):
        if self.beta is not None and not self.beta > 0:
            raise ArgumentError(f"beta must be positive, got {self.beta}")

    def beta_for(self, side: int, orientations: int = ORIENTATION_COUNT) -> float:
        if self.beta is not None:
            return self.beta
        return 1.0 / (2.0 * side * side * orientations)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    dictionary_fingerprint: str
    skipped: Tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (self.dictionary_fingerprint == other.dictionary_fingerprint
                and np.array_equal(self.values, other.values))

    def head(self, dictionary: PatchDictionary) -> "FeatureVector":
        """Truncate to a dictionary produced by `PatchDictionary.head`."""
        k = len(dictionary)
        return FeatureVector(self.values[:k], dictionary.fingerprint,
                             tuple(i for i in self.skipped if i < k))


def _pool_band(maps: np.ndarray, band: Band) -> np.ndarray:
    merged = np.maximum(maps[band.scales[0]], maps[band.scales[1]])
    _, height, width = merged.shape
    rows = math.ceil(height / band.stride)
    cols = math.ceil(width / band.stride)
    pad_y = max((rows - 1) * band.stride + band.grid - height, 0)
    pad_x = max((cols - 1) * band.stride + band.grid - width, 0)
    # -inf padding truncates windows at the border
    padded = np.pad(merged, ((0, 0), (0, pad_y), (0, pad_x)), constant_values=-np.inf)
    windows = sliding_window_view(padded, (band.grid, band.grid), axis=(1, 2))
    windows = windows[:, ::band.stride, ::band.stride][:, :rows, :cols]
    return windows.max(axis=(-2, -1))


def c1_layers(s1: LayerStack, spec: Optional[BandSpec] = None) -> C1Stack:
    """Max over each band's grid×grid windows (at stride offsets) and both of its scales."""
    spec = spec or BandSpec.default()
    needed = max(max(b.scales) for b in spec.bands) + 1
    if len(s1.scales) < needed or min(min(b.scales) for b in spec.bands) < 0:
        raise ArgumentError(
            f"Band table needs {needed} scales, S1 stack has {len(s1.scales)}"
        )
    bands = []
    for band in spec.bands:
        pooled = _pool_band(s1.maps, band)
        pooled.setflags(write=False)
        bands.append(C1Band(pooled, band))
    return C1Stack(tuple(bands), tuple(s1.orientations), source=s1.source)


def s2_response(window: np.ndarray, p: Patch, cfg: MatchConfig = MatchConfig()) -> float:
    """exp(−β‖window − P‖²) for a window of the patch's shape."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != p.values.shape:
        raise ArgumentError(f"Window shape {window.shape} does not match patch {p.values.shape}")
    diff = window - p.values
    beta = cfg.beta_for(p.side, p.values.shape[0])
    return float(max(math.exp(-beta * float(np.sum(diff * diff))), _TINY))


def min_sq_distance(band: C1Band, values: np.ndarray) -> float:
    """Smallest squared distance between `values` and any valid window of the band."""
    side = values.shape[1]
    windows = sliding_window_view(band.maps, (side, side), axis=(1, 2))
    diff = windows - values[:, None, None, :, :]
    return float(np.min(np.sum(diff * diff, axis=(0, 3, 4))))


def c2_features(c1: C1Stack, dictionary: PatchDictionary,
                cfg: MatchConfig = MatchConfig()) -> FeatureVector:
    """Per patch, the best S2 response over every position of every band."""
    if dictionary is None or len(dictionary) == 0:
        raise ArgumentError("c2_features needs a non-empty dictionary")
    values = np.empty(len(dictionary), dtype=np.float64)
    skipped = []
    for i, patch in enumerate(dictionary.patches):
        if patch.values.shape[0] != len(c1.orientations):
            raise ArgumentError(
                f"Patch {i} has {patch.values.shape[0]} orientations, C1 has {len(c1.orientations)}"
            )
        distances = [min_sq_distance(b, patch.values) for b in c1.bands if b.hosts(patch.side)]
        if distances:
            best = min(distances)
        else:
            # no band hosts the patch: distance to an absent (all-zero) window
            best = float(np.sum(patch.values * patch.values))
            skipped.append(i)
        beta = cfg.beta_for(patch.side, patch.values.shape[0])
        values[i] = max(math.exp(-beta * best), _TINY)
    return FeatureVector(values, dictionary.fingerprint, tuple(skipped))
