import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nocspose.crop import CropInfo, Roi, crop_roi
from nocspose.errors import CropError
from nocspose.render import CorrespondenceMap, render_nocs_map

from helpers import tilted_pose


def random_map(rng, h, w):
    return CorrespondenceMap(rng.random((h, w, 3)), rng.random((h, w)) > 0.3, rng.random((h, w)) * 1000)


def test_full_roi_is_identity(rng):
    m = random_map(rng, 48, 48)
    out, info = crop_roi(m, Roi(0, 0, 48, 48, out_size=48))
    assert out.equals(m)
    assert info == CropInfo.identity(48, 48)


def test_upsample_2x_nearest(rng):
    m = random_map(rng, 100, 100)
    out, info = crop_roi(m, Roi(10, 20, 64, 64, out_size=128))
    assert out.coords.shape == (128, 128, 3)
    src = m.coords[20:84, 10:74]
    np.testing.assert_array_equal(out.coords, np.repeat(np.repeat(src, 2, axis=0), 2, axis=1))
    np.testing.assert_array_equal(out.mask, np.repeat(np.repeat(m.mask[20:84, 10:74], 2, 0), 2, 1))
    assert info.scale == (0.5, 0.5)


def test_default_output_is_128(l_block_nocs, cam):
    m = render_nocs_map(l_block_nocs, tilted_pose(), cam)
    out, _ = crop_roi(m, Roi(200, 150, 203, 171))
    assert out.coords.shape[:2] == (128, 128)


def test_outside_pixels_are_background(rng):
    m = CorrespondenceMap(np.full((20, 20, 3), 0.5), np.ones((20, 20), bool))
    out, _ = crop_roi(m, Roi(-10, -10, 20, 20, out_size=20))
    assert not out.mask[:10, :].any() and not out.mask[:, :10].any()
    assert out.mask[10:, 10:].all()


def test_no_intersection():
    m = CorrespondenceMap(np.zeros((20, 20, 3)), np.zeros((20, 20), bool))
    with pytest.raises(CropError):
        crop_roi(m, Roi(25, 0, 10, 10))


def test_nonpositive_roi():
    with pytest.raises(CropError):
        Roi(0, 0, 0, 10)


def test_around_box_is_square_and_padded():
    roi = Roi.around_box((100, 50, 40, 20), pad=0.1)
    assert roi.w == roi.h == 44
    assert roi.x <= 100 - 2 and roi.x + roi.w >= 140 + 2


@settings(max_examples=60, deadline=None)
@given(
    x=st.integers(-30, 60), y=st.integers(-30, 60),
    w=st.integers(1, 90), h=st.integers(1, 90), out=st.integers(1, 70),
)
def test_crop_uncrop_is_exact(x, y, w, h, out):
    # Every crop pixel reports the full-image pixel it was copied from.
    H, W = 60, 70
    coords = np.zeros((H, W, 3))
    yy, xx = np.mgrid[0:H, 0:W]
    coords[..., 0] = (xx + 1) / 128.0
    coords[..., 1] = (yy + 1) / 128.0
    m = CorrespondenceMap(coords, np.ones((H, W), bool))
    roi = Roi(x, y, w, h, out_size=out)
    if not roi.intersects(W, H):
        return
    cropped, info = crop_roi(m, roi)
    rows, cols = np.nonzero(cropped.mask)
    sx, sy = info.source_index(cols, rows)
    np.testing.assert_array_equal(sx, np.rint(cropped.coords[rows, cols, 0] * 128) - 1)
    np.testing.assert_array_equal(sy, np.rint(cropped.coords[rows, cols, 1] * 128) - 1)
    u, v = info.source_pixel_center(cols, rows)
    np.testing.assert_array_equal(u, sx + 0.5)
    # source pixels lie inside the ROI
    assert np.all((sx >= x) & (sx < x + w) & (sy >= y) & (sy < y + h))


def test_crop_info_roundtrip():
    info = CropInfo(3, -4, 50, 60, 128, 128)
    assert CropInfo.from_dict(info.to_dict()) == info
    np.testing.assert_allclose(info.to_full(np.array([0.0, 128.0]), np.array([0.0, 128.0])), [[3, 53], [-4, 56]])


def test_mask_crop_nearest(rng):
    mask = rng.random((30, 30)) > 0.5
    out, _ = crop_roi(mask, Roi(5, 5, 10, 10, out_size=20))
    assert out.dtype == bool
    np.testing.assert_array_equal(out, np.repeat(np.repeat(mask[5:15, 5:15], 2, 0), 2, 1))


def test_rgb_crop_bilinear():
    # A linear ramp is reproduced exactly by bilinear sampling away from the border.
    H, W = 40, 40
    xx = np.tile(np.arange(W, dtype=float) * 5, (H, 1))
    img = np.stack([xx, xx, xx], axis=-1).astype(np.uint8)
    out, info = crop_roi(img, Roi(10, 10, 10, 10, out_size=20))
    assert out.shape == (20, 20, 3) and out.dtype == np.uint8
    # crop pixel centre j + 0.5 maps to source position 10 + (j + 0.5) / 2 - 0.5 in index space
    expected = 5 * (10 + (np.arange(20) + 0.5) / 2 - 0.5)
    np.testing.assert_allclose(out[5, :, 0], np.rint(expected), atol=1)
