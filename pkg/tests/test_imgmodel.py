import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdsa.errors import (
    BlockTooLarge,
    GeometryMismatch,
    IoFailure,
    OffsetsTooLarge,
    UnsupportedFormat,
)
from sdsa.imgmodel import (
    ColorImage,
    CropOffsets,
    GrayImage,
    crop,
    load_image,
    partition,
    replace_luma,
    rgb_to_ycbcr,
    save_jpeg,
    save_lossless,
    scatter_blocks,
    stack_blocks,
    stitch,
    ycbcr_to_rgb,
)


def _random_gray(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, (h, w), dtype=np.uint8))


def _random_color(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return ColorImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


# ---------------------------------------------------------------------
# crop / stitch

def test_identity_crop():
    img = _random_gray(32, 48)
    pair = crop(img, CropOffsets(0, 0))
    assert np.array_equal(pair.inner.pixels, img.pixels)
    assert pair.border.pixel_count == 0


def test_crop_512_with_counting_oracle():
    img = _random_gray(512, 512, seed=3)
    pair = crop(img, CropOffsets(3, 5))
    assert (pair.inner.height, pair.inner.width) == (509, 507)
    # independent oracle: count every position outside the inner rectangle
    removed = sum(1 for r in range(512) for c in range(512) if r < 3 or c < 5)
    assert removed == 512 * 512 - 509 * 507 == 4081
    assert pair.border.pixel_count == removed


def test_crop_empty_inner():
    img = _random_gray(8, 8)
    with pytest.raises(OffsetsTooLarge):
        crop(img, CropOffsets(8, 0))


def test_negative_offsets_rejected():
    with pytest.raises(ValueError):
        CropOffsets(-1, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(9, 40), st.integers(9, 40), st.integers(0, 8), st.integers(0, 8),
       st.integers(0, 2 ** 31 - 1))
def test_stitch_crop_roundtrip(h, w, u, v, seed):
    img = _random_gray(h, w, seed)
    pair = crop(img, CropOffsets(u, v))
    assert np.array_equal(stitch(pair.inner, pair.border).pixels, img.pixels)


def test_stitch_crop_roundtrip_color():
    img = _random_color(25, 31, seed=5)
    pair = crop(img, CropOffsets(2, 2))
    assert np.array_equal(stitch(pair.inner, pair.border).pixels, img.pixels)


def test_stitch_locality():
    img = _random_gray(20, 20, seed=1)
    pair = crop(img, CropOffsets(2, 2))
    inner = pair.inner.copy()
    inner.pixels[7, 9] ^= 0xFF
    out = stitch(inner, pair.border)
    diff = out.pixels != img.pixels
    assert diff.sum() == 1 and diff[9, 11]


def test_stitch_geometry_mismatch():
    pair = crop(_random_gray(100, 100), CropOffsets(1, 2))
    with pytest.raises(GeometryMismatch):
        stitch(_random_gray(99, 97), pair.border)


# ---------------------------------------------------------------------
# partition and block stacking

def test_partition_with_floor_oracle():
    inner = _random_gray(509, 507)
    grid = partition(inner, 8, 8)
    assert (grid.block_rows, grid.block_cols) == (509 // 8, 507 // 8)
    assert grid.block_count == 63 * 63 == 3969
    assert (grid.remainder_rows, grid.remainder_cols) == (5, 3)


def test_partition_exact_fit():
    grid = partition(_random_gray(16, 16), 16, 16)
    assert grid.block_count == 1
    assert grid.remainder_rows == grid.remainder_cols == 0


def test_partition_block_too_large():
    with pytest.raises(BlockTooLarge):
        partition(_random_gray(8, 8), 9, 9)


def test_partition_rejects_tiny_blocks():
    with pytest.raises(ValueError):
        partition(_random_gray(8, 8), 1, 4)


def test_stack_scatter_inverse():
    img = _random_gray(30, 41, seed=7)
    grid = partition(img, 7, 9)
    blocks = stack_blocks(img.pixels, grid)
    assert blocks.shape == (grid.block_count, 7, 9)
    # block pixel multiset equals covered-region pixel multiset
    covered = img.pixels[:grid.block_rows * 7, :grid.block_cols * 9]
    assert sorted(blocks.ravel()) == sorted(covered.ravel())
    out = img.pixels.copy()
    scatter_blocks(out, grid, blocks)
    assert np.array_equal(out, img.pixels)


# ---------------------------------------------------------------------
# color conversion

def test_achromatic_fixed_point():
    img = ColorImage(np.full((4, 4, 3), 128, dtype=np.uint8))
    luma, cb, cr = rgb_to_ycbcr(img)
    assert (luma.pixels == 128).all() and (cb == 128).all() and (cr == 128).all()


def test_pure_red_luma():
    img = ColorImage(np.zeros((1, 1, 3), dtype=np.uint8))
    img.pixels[0, 0, 0] = 255
    luma, _, _ = rgb_to_ycbcr(img)
    assert luma.pixels[0, 0] == 76  # round(0.299 * 255)


def test_color_roundtrip_error_bound():
    rng = np.random.default_rng(2)
    samples = rng.integers(0, 256, (200, 200, 3), dtype=np.uint8)
    # include the corners of the cube where clamping bites hardest
    corners = np.array(np.meshgrid([0, 255], [0, 255], [0, 255])).T.reshape(-1, 3)
    samples[:8, 0] = corners
    img = ColorImage(samples)
    back = ycbcr_to_rgb(*rgb_to_ycbcr(img))
    err = np.abs(back.pixels.astype(int) - img.pixels.astype(int))
    assert err.max() <= 1


def test_replace_luma_hits_target_and_copies_unchanged():
    # interior pixels: +-1 RGB nudges always reach the rounded luma target
    rng = np.random.default_rng(9)
    img = ColorImage(rng.integers(40, 216, (40, 40, 3), dtype=np.uint8))
    luma, _, _ = rgb_to_ycbcr(img)
    target = luma.copy()
    target.pixels[:20] = (target.pixels[:20].astype(int) + 3).astype(np.uint8)
    out = replace_luma(img, target)
    back, _, _ = rgb_to_ycbcr(out)
    assert np.array_equal(back.pixels[:20], target.pixels[:20])
    assert np.array_equal(out.pixels[20:], img.pixels[20:])


def test_replace_luma_best_effort_at_gamut_edge():
    # saturated pixels may not reach the target exactly; stays close
    img = ColorImage(np.zeros((4, 4, 3), dtype=np.uint8))
    target = GrayImage(np.full((4, 4), 2, dtype=np.uint8))
    out = replace_luma(img, target)
    back, _, _ = rgb_to_ycbcr(out)
    assert np.abs(back.pixels.astype(int) - 2).max() <= 2


# ---------------------------------------------------------------------
# file I/O

def test_lossless_roundtrip(tmp_path):
    for img in (_random_gray(33, 21, 4), _random_color(21, 33, 5)):
        path = tmp_path / "x.png"
        save_lossless(img, path)
        back = load_image(path)
        assert type(back) is type(img)
        assert np.array_equal(back.pixels, img.pixels)


def test_jpeg_quality_100_high_fidelity(tmp_path, camera):
    from sdsa.analysis import psnr
    path = tmp_path / "q100.jpg"
    save_jpeg(camera, path, 100)
    back = load_image(path)
    assert psnr(back, camera) > 40


def test_jpeg_quality_validated(tmp_path):
    with pytest.raises(ValueError):
        save_jpeg(_random_gray(8, 8), tmp_path / "x.jpg", 0)


def test_load_truncated_file(tmp_path):
    path = tmp_path / "trunc.png"
    save_lossless(_random_gray(64, 64), path)
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(IoFailure):
        load_image(path)


def test_load_garbage(tmp_path):
    path = tmp_path / "junk.png"
    path.write_bytes(b"this is not an image at all")
    with pytest.raises(UnsupportedFormat):
        load_image(path)


def test_load_unsupported_mode(tmp_path):
    from PIL import Image
    path = tmp_path / "rgba.png"
    Image.new("RGBA", (8, 8)).save(path)
    with pytest.raises(UnsupportedFormat):
        load_image(path)


def test_image_validation():
    with pytest.raises(ValueError):
        GrayImage(np.zeros((0, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        GrayImage(np.full((2, 2), 300))
    with pytest.raises(ValueError):
        ColorImage(np.zeros((4, 4), dtype=np.uint8))
