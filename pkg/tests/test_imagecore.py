import numpy as np
import pytest
from skimage.io import imsave

from pbim.errors import ArgumentError, ImageFormatError, ImageReadError
from pbim.imagecore import GrayImage, from_array, load_image, resize_bilinear, to_luminance


def test_gray_image_rejects_out_of_range_values():
    with pytest.raises(ArgumentError):
        GrayImage(np.array([[0.0, 1.5]]))
    with pytest.raises(ArgumentError):
        GrayImage(np.array([[np.nan, 0.5]]))
    with pytest.raises(ArgumentError):
        GrayImage(np.zeros((0, 4)))


def test_gray_image_is_read_only():
    img = GrayImage(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        img.data[0, 0] = 1.0


def test_gray_raster_converts_exactly():
    pixels = np.array([[0, 255], [128, 64]], dtype=np.uint8)
    assert np.array_equal(to_luminance(pixels), pixels / 255.0)


def test_equal_rgb_channels_give_the_gray_value():
    pixels = np.full((2, 2, 3), 100, dtype=np.uint8)
    assert np.all(to_luminance(pixels) == 100 / 255.0)


def test_primary_colors_use_the_luma_weights():
    pixels = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
    assert to_luminance(pixels).tolist() == [[0.299, 0.587, 0.114]]


def test_sixteen_bit_samples_use_their_own_peak():
    pixels = np.array([[65535, 0]], dtype=np.uint16)
    assert np.array_equal(to_luminance(pixels), np.array([[1.0, 0.0]]))


def test_float_rasters_are_rejected():
    with pytest.raises(ImageFormatError):
        to_luminance(np.zeros((3, 3), dtype=np.float32))


def test_load_png(tmp_path):
    pixels = (np.arange(64, dtype=np.uint8) * 4).reshape(8, 8)
    path = tmp_path / "ramp.png"
    imsave(str(path), pixels, check_contrast=False)
    img = load_image(str(path))
    assert img.name == "ramp.png"
    assert (img.width, img.height) == (8, 8)
    assert np.array_equal(img.data, pixels / 255.0)


def test_load_missing_file_is_a_read_error(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(str(tmp_path / "absent.png"))
    assert issubclass(ImageReadError, OSError)


def test_load_unsupported_suffix(tmp_path):
    path = tmp_path / "notes.txt"
    path.write_text("hello")
    with pytest.raises(ImageFormatError):
        load_image(str(path))


def test_load_corrupt_png_is_a_read_error(tmp_path):
    path = tmp_path / "broken.png"
    path.write_bytes(b"\x89PNG not really")
    with pytest.raises(ImageReadError):
        load_image(str(path))


def test_resize_same_size_returns_equal_image(textured):
    assert resize_bilinear(textured, textured.width, textured.height) == textured


def test_resize_constant_stays_constant():
    img = GrayImage(np.full((10, 14), 0.25))
    out = resize_bilinear(img, 31, 7)
    assert (out.width, out.height) == (31, 7)
    assert np.allclose(out.data, 0.25, atol=1e-12)


def test_resize_interpolates_between_pixel_centers():
    wide = resize_bilinear(GrayImage(np.array([[0.0, 1.0]])), 3, 1)
    assert wide.data[0].tolist() == pytest.approx([0.0, 0.5, 1.0])


def test_resize_rejects_empty_target(textured):
    with pytest.raises(ArgumentError):
        resize_bilinear(textured, 0, 5)


def test_fingerprint_tracks_content():
    a = from_array(np.zeros((4, 4)))
    b = from_array(np.zeros((4, 4)), name="other")
    c = from_array(np.eye(4))
    assert a.fingerprint == b.fingerprint
    assert a == b
    assert a.fingerprint != c.fingerprint
