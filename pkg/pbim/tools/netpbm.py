"""Netpbm writers for debug imagery: 8-bit PGM maps and 1-bit PBM masks."""
import numpy as np

from ..errors import ArgumentError


def scale_to_bytes(values: np.ndarray) -> np.ndarray:
    """Min-max scale to 0..255 (rounded); a constant map becomes all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.uint8)
    return np.rint((values - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path: str, values: np.ndarray) -> None:
    """Binary (P5) graymap of a min-max scaled real map."""
    if np.ndim(values) != 2:
        raise ArgumentError(f"PGM needs a 2-D map, got shape {np.shape(values)}")
    pixels = scale_to_bytes(values)
    height, width = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def write_pbm(path: str, mask: np.ndarray) -> None:
    """Binary (P4) bitmap; set bits are mask pixels, rows padded to whole bytes."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ArgumentError(f"PBM needs a 2-D mask, got shape {mask.shape}")
    height, width = mask.shape
    with open(path, "wb") as f:
        f.write(f"P4\n{width} {height}\n".encode("ascii"))
        f.write(np.packbits(mask, axis=1).tobytes())
