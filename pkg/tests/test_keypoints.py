import numpy as np
import pytest

from pbim.errors import ArgumentError
from pbim.filterbank import LayerStack, OghmBank, processing_layers
from pbim.imagecore import GrayImage
from pbim.keypoints import (
    CIRCLE, fast_detect, multiscale_keypoints, normalize_layer, resize_mask_nearest,
    segment_test_scores,
)
from pbim.saliency import SalientMask


def oracle_scores(values, t):
    """Per-pixel segment test by trying all 16 rotations of a 9-long arc."""
    h, w = values.shape
    scores = np.zeros_like(values)
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            c = values[y, x]
            ring = [values[y + dy, x + dx] for dy, dx in CIRCLE]
            members = [False] * 16
            for start in range(16):
                arc = [(start + k) % 16 for k in range(9)]
                if all(ring[i] > c + t for i in arc) or all(ring[i] < c - t for i in arc):
                    for i in arc:
                        members[i] = True
            score = 0.0
            for i in range(16):
                if members[i]:
                    score = score + abs(ring[i] - c)
            scores[y, x] = score
    return scores


def oracle_corners(scores):
    h, w = scores.shape
    found = set()
    for y in range(h):
        for x in range(w):
            if scores[y, x] <= 0:
                continue
            neighbours = [scores[yy, xx] for yy in range(y - 1, y + 2) for xx in range(x - 1, x + 2)
                          if 0 <= yy < h and 0 <= xx < w and (yy, xx) != (y, x)]
            if all(scores[y, x] >= n for n in neighbours):
                found.add((x, y))
    return found


def test_detector_matches_brute_force_segment_test(rng):
    for _ in range(20):
        values = rng.random((32, 32))
        expected = oracle_scores(values, 0.1)
        assert np.array_equal(segment_test_scores(values, 0.1), expected)
        assert {(kp.x, kp.y) for kp in fast_detect(values, 0.1)} == oracle_corners(expected)


def test_square_corners_are_found_and_edges_are_not():
    values = np.zeros((32, 32))
    values[10:22, 10:22] = 1.0
    corners = [(10, 10), (21, 10), (10, 21), (21, 21)]
    found = fast_detect(values, 0.05)
    assert found
    for kp in found:
        assert min(max(abs(kp.x - cx), abs(kp.y - cy)) for cx, cy in corners) <= 1
    for cx, cy in corners:
        assert any(max(abs(kp.x - cx), abs(kp.y - cy)) <= 1 for kp in found)


def test_flat_map_has_no_corners():
    assert fast_detect(np.full((16, 16), 0.5), 0.05) == []


def test_detector_validates_inputs():
    with pytest.raises(ArgumentError):
        fast_detect(np.zeros((5, 20)), 0.05)
    with pytest.raises(ArgumentError):
        fast_detect(np.zeros((20, 20)), 0.0)


def test_normalize_layer():
    assert normalize_layer(np.array([[2.0, 4.0], [3.0, 2.0]])).tolist() == [[0.0, 1.0], [0.5, 0.0]]
    assert not normalize_layer(np.full((3, 3), 7.0)).any()


def test_nearest_mask_resize():
    mask = np.array([[True, False], [False, True]])
    big = resize_mask_nearest(mask, 4, 4)
    assert big.tolist() == [
        [True, True, False, False],
        [True, True, False, False],
        [False, False, True, True],
        [False, False, True, True],
    ]


def square_stack(source="img"):
    maps = np.zeros((2, 2, 32, 32))
    maps[:, :, 10:22, 10:22] = 1.0
    return LayerStack((7, 9), (0.0, np.pi / 2), maps, source=source)


def test_multiscale_keypoints_stay_inside_the_mask():
    mask = np.zeros((32, 32), dtype=bool)
    mask[:16, :16] = True
    found = multiscale_keypoints(square_stack(), SalientMask(mask, 0.0, 0.0, source="img"), 0.05)
    assert found
    assert all(mask[kp.y, kp.x] for kp in found)
    assert {kp.scale_index for kp in found} == {0, 1}
    keys = [(kp.scale_index, kp.theta) for kp in found]
    assert keys == sorted(keys)


def test_multiscale_keypoints_reject_foreign_masks():
    mask = SalientMask(np.ones((32, 32), dtype=bool), 0.0, 0.0, source="other")
    with pytest.raises(ArgumentError):
        multiscale_keypoints(square_stack(), mask)


def random_stack(rng, source="img"):
    return LayerStack((7, 9), (0.0, np.pi / 2), rng.random((2, 2, 32, 32)), source=source)


def as_tuples(keypoints):
    return [(kp.x, kp.y, kp.score, kp.scale_index, kp.theta) for kp in keypoints]


def test_empty_mask_yields_no_keypoints(rng):
    nowhere = SalientMask(np.zeros((32, 32), dtype=bool), 1.0, 0.5)
    assert multiscale_keypoints(square_stack(), nowhere) == []
    assert multiscale_keypoints(random_stack(rng), nowhere) == []


def test_full_mask_matches_unmasked_detection(rng):
    stack = random_stack(rng)
    everywhere = SalientMask(np.ones((32, 32), dtype=bool), 0.0, 0.5)
    expected = []
    for si, _, theta, layer in stack:
        hits = sorted(fast_detect(normalize_layer(layer), 0.05), key=lambda kp: (-kp.score, kp.y, kp.x))
        expected.extend((kp.x, kp.y, kp.score, si, theta) for kp in hits)
    assert expected
    assert as_tuples(multiscale_keypoints(stack, everywhere, 0.05)) == expected


def test_growing_the_mask_only_adds_keypoints(rng):
    stack = random_stack(rng)
    outer = rng.random((32, 32)) > 0.3
    inner = outer & (rng.random((32, 32)) > 0.5)
    small = set(as_tuples(multiscale_keypoints(stack, SalientMask(inner, 0.0, 0.0))))
    large = set(as_tuples(multiscale_keypoints(stack, SalientMask(outer, 0.0, 0.0))))
    assert small <= large
    assert len(small) < len(large)


def test_corner_is_found_on_fine_oghm_layers():
    values = np.zeros((40, 40))
    values[20:, 20:] = 1.0
    layers = processing_layers(GrayImage(values), OghmBank(sizes=(7, 9)))
    window = np.zeros((40, 40), dtype=bool)
    window[12:28, 12:28] = True
    found = multiscale_keypoints(layers, SalientMask(window, 0.0, 0.0))
    fine = [kp for kp in found if kp.scale_index == 0]
    # the corner sits between pixels 19 and 20
    assert any(abs(kp.x - 19.5) <= 2.5 and abs(kp.y - 19.5) <= 2.5 for kp in fine)
