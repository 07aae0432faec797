import os
import sys

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from pbim.imagecore import GrayImage
from pbim.synthetic import make_synthetic_dataset


def smooth_image(seed: int, size: int = 64, sigma: float = 2.0, name: str = "") -> GrayImage:
    """Smoothed uniform noise stretched to [0, 1]."""
    rng = np.random.default_rng(seed)
    values = gaussian_filter(rng.random((size, size)), sigma)
    values = (values - values.min()) / (values.max() - values.min())
    return GrayImage(values, name=name or f"smooth{seed}.png")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def textured():
    return smooth_image(7)


@pytest.fixture(scope="session")
def training_images():
    return [smooth_image(100 + i) for i in range(3)]


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic")
    make_synthetic_dataset(str(root), n_per_class=8, size=64, seed=3)
    return str(root)


@pytest.fixture
def image_factory():
    return smooth_image
