"""
Filter banks — Gabor and oriented Gaussian-Hermite moment (OGHM) kernels,
the convolution engine, and the S1 / processing-layer stacks built from them.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np

from .backends import get_backend
from .errors import ArgumentError
from .imagecore import GrayImage
from .workers import ordered_map

DEFAULT_SIZES = tuple(range(7, 38, 2))
DEFAULT_ORIENTATIONS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
DEFAULT_CROSSOVER = 1_000_000


def gabor_sigma(size: int) -> float:
    """Scale of the Gabor envelope for a square kernel of the given side."""
    return 0.0036 * size ** 2 + 0.35 * size + 0.18


def _check_mask_side(value: int, label: str):
    if int(value) != value or value < 3 or value % 2 == 0:
        raise ArgumentError(f"{label} must be an odd integer >= 3, got {value}")


@dataclass(frozen=True)
class GaborParams:
    """Parameters of one Gabor kernel. theta is reduced to [0, pi)."""
    theta: float
    lambda_: float
    sigma: float
    gamma: float
    size: int

    def __post_init__(self):
        _check_mask_side(self.size, "Gabor kernel size")
        for label, value in (("sigma", self.sigma), ("lambda", self.lambda_), ("gamma", self.gamma)):
            if not (value > 0 and math.isfinite(value)):
                raise ArgumentError(f"Gabor {label} must be positive, got {value}")
        theta = math.fmod(self.theta, math.pi) % math.pi
        # tiny negative angles round up to pi
        object.__setattr__(self, "theta", 0.0 if theta >= math.pi else theta)

    @classmethod
    def for_size(cls, size: int, theta: float, gamma: float = 0.3) -> "GaborParams":
        sigma = gabor_sigma(size)
        return cls(theta=theta, lambda_=sigma / 0.8, sigma=sigma, gamma=gamma, size=size)


@dataclass(frozen=True)
class OghmKernelSpec:
    """Parameters of one oriented Gaussian-Hermite mask of m×n pixels."""
    p: int
    q: int
    theta: float
    sigma: float
    m: int
    n: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ArgumentError(f"Hermite orders must be non-negative, got ({self.p}, {self.q})")
        _check_mask_side(self.m, "OGHM mask width")
        _check_mask_side(self.n, "OGHM mask height")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ArgumentError(f"OGHM sigma must be positive, got {self.sigma}")

    @property
    def prefactor(self) -> float:
        return 4.0 / ((self.m - 1) * (self.n - 1))


@dataclass(frozen=True)
class Kernel:
    """Row-major kernel weights, shape (side_y, side_x), with their originating parameters."""
    weights: np.ndarray
    meta: Union[GaborParams, OghmKernelSpec]

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def side_x(self) -> int:
        return self.weights.shape[1]

    @property
    def side_y(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class GaborBank:
    """Square Gabor kernels over a size ladder (scales) × orientations."""
    sizes: Tuple[int, ...] = DEFAULT_SIZES
    orientations: Tuple[float, ...] = DEFAULT_ORIENTATIONS
    gamma: float = 0.3

    def params(self) -> List[List[GaborParams]]:
        return [[GaborParams.for_size(s, th, self.gamma) for th in self.orientations]
                for s in self.sizes]

    def kernels(self) -> List[List[Kernel]]:
        return [[make_gabor_kernel(p) for p in row] for row in self.params()]


@dataclass(frozen=True)
class OghmBank:
    """Square OGHM masks over the size ladder × orientations, sigma = ratio × side."""
    sizes: Tuple[int, ...] = DEFAULT_SIZES
    orientations: Tuple[float, ...] = DEFAULT_ORIENTATIONS
    orders: Tuple[int, int] = (1, 0)
    sigma_ratio: float = 0.25

    def specs(self) -> List[List[OghmKernelSpec]]:
        p, q = self.orders
        return [[OghmKernelSpec(p=p, q=q, theta=th, sigma=self.sigma_ratio * s, m=s, n=s)
                 for th in self.orientations]
                for s in self.sizes]

    def kernels(self) -> List[List[Kernel]]:
        return [[make_oghm_kernel(s) for s in row] for row in self.specs()]


@dataclass(frozen=True)
class LayerStack:
    """
    Scale × orientation stack of non-negative response maps.
    `maps` has shape (len(scales), len(orientations), height, width), scale-major.
    """
    scales: Tuple[int, ...]
    orientations: Tuple[float, ...]
    maps: np.ndarray
    source: str = ""
    kind: str = "gabor"

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim != 4 or maps.shape[:2] != (len(self.scales), len(self.orientations)):
            raise ArgumentError(
                f"LayerStack maps shape {maps.shape} does not match "
                f"{len(self.scales)} scales x {len(self.orientations)} orientations"
            )
        maps.setflags(write=False)
        object.__setattr__(self, "maps", maps)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.maps.shape[2], self.maps.shape[3]

    def layer(self, scale_index: int, orientation_index: int) -> np.ndarray:
        return self.maps[scale_index, orientation_index]

    def __iter__(self):
        for si, scale in enumerate(self.scales):
            for oi, theta in enumerate(self.orientations):
                yield si, oi, theta, self.maps[si, oi]


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x); accepts scalars or arrays."""
    if n < 0:
        raise ArgumentError(f"Hermite order must be non-negative, got {n}")
    h_prev = np.ones_like(x, dtype=np.float64) if isinstance(x, np.ndarray) else 1.0
    if n == 0:
        return h_prev
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def _centered_grid(side_y: int, side_x: int) -> Tuple[np.ndarray, np.ndarray]:
    ry, rx = side_y // 2, side_x // 2
    y, x = np.mgrid[-ry:ry + 1, -rx:rx + 1]
    return x.astype(np.float64), y.astype(np.float64)


def gabor_function(theta: float, lambda_: float, sigma: float, gamma: float, size: int) -> np.ndarray:
    """Raw Gabor weights on the integer grid centered at the kernel midpoint, any theta."""
    x, y = _centered_grid(size, size)
    x_o = x * math.cos(theta) + y * math.sin(theta)
    y_o = -x * math.sin(theta) + y * math.cos(theta)
    envelope = np.exp(-(x_o ** 2 + gamma ** 2 * y_o ** 2) / (2.0 * sigma ** 2))
    return envelope * np.cos(2.0 * math.pi * x_o / lambda_)


def make_gabor_kernel(p: GaborParams) -> Kernel:
    """Gabor kernel normalized to zero mean and unit L2 norm."""
    weights = gabor_function(p.theta, p.lambda_, p.sigma, p.gamma, p.size)
    weights = weights - weights.mean()
    norm = np.linalg.norm(weights)
    if not norm > 0:
        raise ArgumentError(f"Degenerate Gabor kernel for {p}")
    return Kernel(weights / norm, p)


def gaussian_hermite(order: int, t: np.ndarray, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian-Hermite function of the given order."""
    scale = 1.0 / (math.sqrt(2.0 ** order * math.factorial(order)) * math.sqrt(math.pi) * sigma)
    return scale * np.exp(-t ** 2 / (2.0 * sigma ** 2)) * hermite(order, t / sigma)


def make_oghm_kernel(s: OghmKernelSpec) -> Kernel:
    """Oriented Gaussian-Hermite mask evaluated in rotated coordinates."""
    x, y = _centered_grid(s.n, s.m)
    big_x = x * math.cos(s.theta) + y * math.sin(s.theta)
    big_y = -x * math.sin(s.theta) + y * math.cos(s.theta)
    weights = s.prefactor * gaussian_hermite(s.p, big_x, s.sigma) * gaussian_hermite(s.q, big_y, s.sigma)
    return Kernel(weights, s)


def choose_backend(image_shape: Tuple[int, int], kernel_shape: Tuple[int, int],
                   crossover: int = DEFAULT_CROSSOVER) -> str:
    image_area = image_shape[0] * image_shape[1]
    kernel_area = kernel_shape[0] * kernel_shape[1]
    return "spectral" if image_area * kernel_area > crossover else "direct"


def convolve(img: Union[GrayImage, np.ndarray], k: Union[Kernel, np.ndarray],
             backend: str = "auto", crossover: int = DEFAULT_CROSSOVER) -> np.ndarray:
    """
    Same-size signed correlation of an image with a kernel.

    Args:
        img: GrayImage or 2-D array.
        k: Kernel or 2-D array with odd sides no larger than the image.
        backend: 'direct', 'spectral' or 'auto' (picked by kernel area × image area).
        crossover: area product above which 'auto' chooses the spectral backend.
    """
    data = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    weights = k.weights if isinstance(k, Kernel) else np.asarray(k, dtype=np.float64)
    if data.ndim != 2 or weights.ndim != 2:
        raise ArgumentError("convolve expects 2-D image and kernel")
    if weights.shape[0] % 2 == 0 or weights.shape[1] % 2 == 0:
        raise ArgumentError(f"Kernel sides must be odd, got {weights.shape}")
    if weights.shape[0] > data.shape[0] or weights.shape[1] > data.shape[1]:
        raise ArgumentError(
            f"Kernel {weights.shape[1]}x{weights.shape[0]} is larger than "
            f"image {data.shape[1]}x{data.shape[0]}"
        )
    if backend == "auto":
        backend = choose_backend(data.shape, weights.shape, crossover)
    return get_backend(backend).correlate(data, weights)


@lru_cache(maxsize=8)
def _cached_kernels(bank: Union[GaborBank, OghmBank]) -> List[List[Kernel]]:
    return bank.kernels()


def _magnitude_stack(img: GrayImage, kernels: List[List[Kernel]], scales, orientations,
                     kind: str, backend: str, crossover: int, threads: int) -> LayerStack:
    flat = [k for row in kernels for k in row]
    responses = ordered_map(lambda k: np.abs(convolve(img, k, backend, crossover)), flat, threads)
    maps = np.stack(responses).reshape(len(scales), len(orientations), img.height, img.width)
    return LayerStack(tuple(scales), tuple(orientations), maps, source=img.fingerprint, kind=kind)


def s1_layers(img: GrayImage, bank: Optional[GaborBank] = None, backend: str = "auto",
              crossover: int = DEFAULT_CROSSOVER, threads: int = 1) -> LayerStack:
    """Gabor magnitude responses |G * I| per (scale, orientation)."""
    bank = bank or GaborBank()
    return _magnitude_stack(img, _cached_kernels(bank), bank.sizes, bank.orientations,
                            "gabor", backend, crossover, threads)


def processing_layers(img: GrayImage, spec: Optional[OghmBank] = None, backend: str = "auto",
                      crossover: int = DEFAULT_CROSSOVER, threads: int = 1) -> LayerStack:
    """OGHM magnitude responses per (scale, orientation)."""
    spec = spec or OghmBank()
    return _magnitude_stack(img, _cached_kernels(spec), spec.sizes, spec.orientations,
                            "oghm", backend, crossover, threads)
