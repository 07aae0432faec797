"""Spectral-residual saliency and salient-region binarization."""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter, uniform_filter

from .errors import ArgumentError
from .imagecore import GrayImage, bilinear

ANALYSIS_SIZE = 64
SPECTRUM_BOX = 3
SMOOTHING_SIGMA = 2.5
MIN_ANALYSIS_SIDE = 8
_LOG_FLOOR = 1e-12
_FLAT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Amplitude, log-amplitude, phase and residual spectra at the analysis resolution."""
    amplitude: np.ndarray
    log_amplitude: np.ndarray
    phase: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    analysis_shape: Tuple[int, int]
    source: str = ""
    decomposition: Optional[SpectralDecomposition] = field(default=None, compare=False, repr=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class SalientMask:
    mask: np.ndarray
    threshold: float
    mean: float
    source: str = ""

    @property
    def coverage(self) -> float:
        return float(self.mask.mean())


def analysis_shape(height: int, width: int, size: int = ANALYSIS_SIZE) -> Tuple[int, int]:
    """Scale so the larger side equals `size`."""
    scale = size / max(height, width)
    return max(int(round(height * scale)), 1), max(int(round(width * scale)), 1)


def decompose(small: np.ndarray, box: int = SPECTRUM_BOX) -> SpectralDecomposition:
    spectrum = np.fft.fft2(small)
    amplitude = np.abs(spectrum)
    log_amplitude = np.log(amplitude + _LOG_FLOOR)
    # the spectrum is periodic, so the local average wraps
    residual = log_amplitude - uniform_filter(log_amplitude, size=box, mode="wrap")
    return SpectralDecomposition(amplitude, log_amplitude, np.angle(spectrum), residual)


def spectral_residual(img: GrayImage, out_w: int, out_h: int,
                      analysis_size: int = ANALYSIS_SIZE,
                      smoothing_sigma: float = SMOOTHING_SIGMA) -> SaliencyMap:
    """
    Saliency map |F⁻¹(exp(R(f) + iP(f)))|², smoothed and resampled to out_w × out_h.
    """
    if out_w < 1 or out_h < 1:
        raise ArgumentError(f"Output size must be at least 1x1, got {out_w}x{out_h}")
    shape = analysis_shape(img.height, img.width, analysis_size)
    if min(shape) < MIN_ANALYSIS_SIDE:
        raise ArgumentError(
            f"Image {img.width}x{img.height} is degenerate for saliency analysis "
            f"(analysis grid {shape[1]}x{shape[0]}, need >= {MIN_ANALYSIS_SIDE})"
        )
    small = bilinear(img.data, *shape)
    parts = decompose(small)
    if np.ptp(small) <= _FLAT_TOLERANCE:
        # a flat image has no spectral structure to single out
        sal = np.zeros(shape)
    else:
        recon = np.fft.ifft2(np.exp(parts.residual + 1j * parts.phase))
        sal = gaussian_filter(np.abs(recon) ** 2, smoothing_sigma)
    values = np.maximum(bilinear(sal, out_h, out_w), 0.0)
    return SaliencyMap(values, shape, source=img.fingerprint, decomposition=parts)


def salient_region(sal: SaliencyMap, multiplier: float = 2.0) -> SalientMask:
    """Pixels whose saliency strictly exceeds multiplier × mean saliency."""
    if sal.values.size == 0:
        raise ArgumentError("Saliency map is empty")
    mean = float(sal.values.mean())
    threshold = multiplier * mean
    return SalientMask(sal.values > threshold, threshold, mean, source=sal.source)
