import math

import numpy as np
import pytest

from pbim.backends import get_backend
from pbim.errors import ArgumentError
from pbim.filterbank import (
    DEFAULT_ORIENTATIONS, GaborBank, GaborParams, OghmBank, OghmKernelSpec, choose_backend,
    convolve, gabor_function, hermite, make_gabor_kernel, make_oghm_kernel, processing_layers,
    s1_layers,
)
from pbim.imagecore import GrayImage


def brute_correlate(image, kernel):
    ry, rx = kernel.shape[0] // 2, kernel.shape[1] // 2
    padded = np.pad(image, ((ry, ry), (rx, rx)), mode="symmetric")
    out = np.zeros_like(image)
    for y in range(image.shape[0]):
        for x in range(image.shape[1]):
            out[y, x] = np.sum(padded[y:y + kernel.shape[0], x:x + kernel.shape[1]] * kernel)
    return out


def test_direct_backend_matches_brute_force(rng):
    image = rng.random((12, 15))
    kernel = rng.standard_normal((5, 7))
    assert np.max(np.abs(get_backend("direct").correlate(image, kernel) - brute_correlate(image, kernel))) <= 1e-10


def test_direct_and_spectral_agree(rng):
    for _ in range(50):
        h, w = (int(v) for v in rng.integers(8, 65, 2))
        ky = int(rng.integers(0, (min(h, 37) - 1) // 2 + 1)) * 2 + 1
        kx = int(rng.integers(0, (min(w, 37) - 1) // 2 + 1)) * 2 + 1
        image = rng.random((h, w))
        kernel = rng.standard_normal((ky, kx))
        direct = convolve(image, kernel, backend="direct")
        spectral = convolve(image, kernel, backend="spectral")
        assert direct.shape == (h, w)
        assert np.max(np.abs(direct - spectral)) <= 1e-6


def test_auto_backend_switches_on_area_product():
    assert choose_backend((64, 64), (7, 7)) == "direct"
    assert choose_backend((64, 64), (37, 37)) == "spectral"


def test_convolve_rejects_bad_kernels(rng):
    image = rng.random((10, 10))
    with pytest.raises(ArgumentError):
        convolve(image, np.ones((4, 3)))
    with pytest.raises(ArgumentError):
        convolve(image, np.ones((11, 11)))
    with pytest.raises(ArgumentError):
        convolve(image, np.ones((3, 3)), backend="bogus")


def test_delta_kernel_is_identity(rng):
    image = rng.random((9, 9))
    delta = np.zeros((3, 3))
    delta[1, 1] = 1.0
    assert np.array_equal(convolve(image, delta, backend="direct"), image)


def test_gabor_kernels_are_zero_mean_unit_norm():
    bank = GaborBank()
    kernels = [k for row in bank.kernels() for k in row]
    assert len(kernels) == 64
    for k in kernels:
        assert abs(k.weights.mean()) <= 1e-10
        assert abs(np.linalg.norm(k.weights) - 1.0) <= 1e-10


def test_gabor_parameters_follow_the_size_ladder():
    p = GaborParams.for_size(7, 0.0)
    assert p.sigma == pytest.approx(0.0036 * 49 + 0.35 * 7 + 0.18)
    assert p.lambda_ == pytest.approx(p.sigma / 0.8)
    assert p.gamma == 0.3


def test_gabor_half_turn_symmetry():
    for theta in DEFAULT_ORIENTATIONS:
        a = gabor_function(theta, 5.0, 4.0, 0.3, 11)
        b = gabor_function(theta + math.pi, 5.0, 4.0, 0.3, 11)
        assert np.allclose(a, b, atol=1e-12)
    p = GaborParams.for_size(11, 0.5 + math.pi)
    assert p.theta == pytest.approx(0.5)


def test_gabor_params_validation():
    with pytest.raises(ArgumentError):
        GaborParams.for_size(8, 0.0)
    with pytest.raises(ArgumentError):
        GaborParams(theta=0.0, lambda_=-1.0, sigma=1.0, gamma=0.3, size=7)


def test_gabor_theta_is_reduced_to_half_turn():
    assert GaborParams(theta=-1e-20, lambda_=4.0, sigma=2.8, gamma=0.3, size=7).theta == 0.0
    assert GaborParams(theta=math.pi, lambda_=4.0, sigma=2.8, gamma=0.3, size=7).theta == 0.0
    assert GaborParams.for_size(7, -math.pi / 4).theta == pytest.approx(3 * math.pi / 4)


def test_hermite_matches_closed_forms():
    closed = [
        lambda x: 1.0,
        lambda x: 2.0 * x,
        lambda x: 4.0 * x ** 2 - 2.0,
        lambda x: 8.0 * x ** 3 - 12.0 * x,
        lambda x: 16.0 * x ** 4 - 48.0 * x ** 2 + 12.0,
        lambda x: 32.0 * x ** 5 - 160.0 * x ** 3 + 120.0 * x,
    ]
    for n, expected in enumerate(closed):
        for x in (0.0, 1.0, -1.0, 2.0, -2.0):
            assert hermite(n, x) == expected(x)


def test_hermite_rejects_negative_order():
    with pytest.raises(ArgumentError):
        hermite(-1, 0.0)


def test_odd_order_oghm_masks_sum_to_zero():
    for theta in DEFAULT_ORIENTATIONS:
        for p, q in ((1, 0), (0, 1), (3, 0), (2, 1)):
            k = make_oghm_kernel(OghmKernelSpec(p=p, q=q, theta=theta, sigma=2.0, m=11, n=11))
            assert abs(k.weights.sum()) <= 1e-10


def test_oghm_quarter_turn_rotates_the_mask():
    base = make_oghm_kernel(OghmKernelSpec(1, 0, 0.0, 3.0, 13, 13)).weights
    turned = make_oghm_kernel(OghmKernelSpec(1, 0, math.pi / 2, 3.0, 13, 13)).weights
    assert np.allclose(np.rot90(base, k=-1), turned, atol=1e-12)


def test_oghm_spec_validation():
    with pytest.raises(ArgumentError):
        OghmKernelSpec(p=-1, q=0, theta=0.0, sigma=1.0, m=7, n=7)
    with pytest.raises(ArgumentError):
        OghmKernelSpec(p=1, q=0, theta=0.0, sigma=1.0, m=6, n=7)


def test_s1_stack_shape_and_sign(textured):
    layers = s1_layers(textured)
    assert layers.maps.shape == (16, 4, 64, 64)
    assert layers.shape == (64, 64)
    assert layers.kind == "gabor"
    assert layers.source == textured.fingerprint
    assert np.all(layers.maps >= 0)


def test_s1_ignores_a_brightness_offset(textured):
    dim = GrayImage(textured.data * 0.5)
    bright = GrayImage(textured.data * 0.5 + 0.3)
    assert np.max(np.abs(s1_layers(dim).maps - s1_layers(bright).maps)) <= 1e-9


def test_flat_image_has_no_s1_response():
    assert np.max(s1_layers(GrayImage(np.full((48, 48), 0.7))).maps) <= 1e-8


def test_vertical_edge_prefers_the_zero_orientation():
    values = np.zeros((64, 64))
    values[:, 32:] = 1.0
    maps = s1_layers(GrayImage(values)).maps
    energy = maps[:, :, 8:-8, 8:-8].sum(axis=(0, 2, 3))
    assert int(np.argmax(energy)) == 0


def test_s1_thread_count_does_not_change_values(textured):
    assert np.array_equal(s1_layers(textured, threads=3).maps, s1_layers(textured, threads=1).maps)


def test_processing_layers_match_direct_magnitudes(textured):
    bank = OghmBank(sizes=(7, 9), orientations=(0.0, math.pi / 2))
    layers = processing_layers(textured, bank)
    kernel = make_oghm_kernel(OghmKernelSpec(1, 0, math.pi / 2, 0.25 * 9, 9, 9))
    expected = np.abs(convolve(textured, kernel, backend="direct"))
    assert np.allclose(layers.layer(1, 1), expected, atol=1e-12)


def test_oghm_stack_is_equivariant_under_quarter_turns(image_factory):
    # orientation channel o of an image maps to channel o + 2 of its clockwise quarter turn
    for seed in (1, 2, 3):
        img = image_factory(seed)
        turned = type(img)(np.rot90(img.data, k=-1))
        a = processing_layers(img).maps
        b = processing_layers(turned).maps
        for s in range(a.shape[0]):
            for o in range(4):
                expected = np.rot90(a[s, o], k=-1)[8:-8, 8:-8]
                actual = b[s, (o + 2) % 4][8:-8, 8:-8]
                assert np.max(np.abs(actual - expected)) <= 1e-3 * max(np.max(np.abs(expected)), 1e-12)
