"""Image ingestion — loading, luminance conversion, resizing and normalization."""
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np
from skimage.io import imread
from skimage.transform import resize

from .errors import ArgumentError, ImageFormatError, ImageReadError

SUPPORTED_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm"}

# ITU-R BT.601 luma weights, in thousandths so gray pixels convert exactly
LUMA_WEIGHTS = (299, 587, 114)


@dataclass(frozen=True)
class GrayImage:
    """
    Immutable 2-D intensity grid with values in [0, 1].

    `data` is a read-only float64 array of shape (height, width).
    """
    data: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ArgumentError(f"GrayImage needs a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ArgumentError("GrayImage values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def fingerprint(self) -> str:
        """Content hash identifying the source image of derived maps."""
        digest = hashlib.sha1()
        digest.update(f"{self.height}x{self.width}".encode())
        digest.update(self.data.tobytes())
        return digest.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height}{', ' + self.name if self.name else ''})"


def to_luminance(pixels: np.ndarray) -> np.ndarray:
    """Convert an integer raster (H×W, H×W×3 or H×W×4) to [0, 1] intensities."""
    if pixels.dtype.kind not in "ui":
        raise ImageFormatError(f"Unsupported sample type {pixels.dtype}")
    peak = float(np.iinfo(pixels.dtype).max)
    if pixels.ndim == 2:
        return pixels.astype(np.float64) / peak
    if pixels.ndim == 3 and pixels.shape[2] == 2:
        # gray + alpha
        return pixels[..., 0].astype(np.float64) / peak
    if pixels.ndim == 3 and pixels.shape[2] in (3, 4):
        rgb = pixels[..., :3].astype(np.int64)
        weighted = rgb @ np.array(LUMA_WEIGHTS, dtype=np.int64)
        return weighted.astype(np.float64) / (1000.0 * peak)
    raise ImageFormatError(f"Unsupported raster layout with shape {pixels.shape}")


def load_image(path: str) -> GrayImage:
    """Load a PNG or PGM/PPM file as a GrayImage."""
    suffix = os.path.splitext(path)[1].lower()
    if not os.path.isfile(path):
        raise ImageReadError(f"Cannot read image '{path}': no such file")
    if suffix not in SUPPORTED_SUFFIXES:
        raise ImageFormatError(
            f"Unsupported image format '{suffix}' for '{path}'. "
            f"Supported: {sorted(SUPPORTED_SUFFIXES)}"
        )
    try:
        pixels = np.asarray(imread(path))
    except Exception as e:
        raise ImageReadError(f"Cannot decode image '{path}': {e}") from e
    return GrayImage(to_luminance(pixels), name=os.path.basename(path))


def bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Center-aligned bilinear resampling with edge clamping, any value range."""
    if height < 1 or width < 1:
        raise ArgumentError(f"Target size must be at least 1x1, got {width}x{height}")
    if values.shape == (height, width):
        return np.array(values, dtype=np.float64, copy=True)
    return resize(values.astype(np.float64), (height, width), order=1, mode="edge",
                  anti_aliasing=False, preserve_range=True)


def resize_bilinear(img: GrayImage, w: int, h: int) -> GrayImage:
    """Resize to w×h; same-size targets return an equal image."""
    if w < 1 or h < 1:
        raise ArgumentError(f"Target size must be at least 1x1, got {w}x{h}")
    if (h, w) == (img.height, img.width):
        return img
    return GrayImage(np.clip(bilinear(img.data, h, w), 0.0, 1.0), name=img.name)


def from_array(values: np.ndarray, name: str = "") -> GrayImage:
    """Wrap an array, clipping to [0, 1]."""
    return GrayImage(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0), name=name)
