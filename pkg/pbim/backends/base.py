"""Abstract base class for all convolution backends."""
from abc import ABC, abstractmethod

import numpy as np


class ConvolutionBackend(ABC):
    """
    Unified interface for same-size correlation engines.
    Every backend must implement the `correlate` method.
    """

    name = "base"

    @abstractmethod
    def correlate(self, image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
        """
        Correlate an image with an odd-sided kernel.

        Args:
            image: 2-D float array (height, width).
            kernel: 2-D float array with odd side lengths, smaller than the image.

        Returns:
            Signed response of the image's shape. Borders are handled by
            half-sample symmetric reflection (d c b a | a b c d | d c b a).
        """
        pass

    def __repr__(self):
        return f"{self.__class__.__name__}()"
