from ..errors import ArgumentError
from .base import ConvolutionBackend
from .direct import DirectBackend
from .spectral import SpectralBackend

BACKENDS = {
    "direct": DirectBackend,
    "spectral": SpectralBackend,
}


def get_backend(name: str) -> ConvolutionBackend:
    """Factory function to get a convolution backend by name."""
    if name not in BACKENDS:
        raise ArgumentError(f"Unknown backend: {name}. Available: {list(BACKENDS.keys())}")
    return BACKENDS[name]()
