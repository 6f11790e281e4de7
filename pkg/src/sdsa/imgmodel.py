"""Image rasters, crop/stitch geometry, block partitioning and file I/O.

All operations are pure: they return new images and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    BlockTooLarge,
    GeometryMismatch,
    IoFailure,
    OffsetsTooLarge,
    UnsupportedFormat,
)


class GrayImage:
    """8-bit grayscale raster, row-major (height, width) array."""

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("gray image must be a non-empty 2-D array")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "GrayImage":
        return GrayImage(self.pixels.copy())

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


class ColorImage:
    """8-bit RGB raster, (height, width, 3) array."""

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("color image must be a non-empty (H, W, 3) array")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "ColorImage":
        return ColorImage(self.pixels.copy())

    def __repr__(self) -> str:
        return f"ColorImage({self.width}x{self.height})"


AnyImage = GrayImage | ColorImage


@dataclass(frozen=True)
class CropOffsets:
    """Rows removed from the top (u) and columns removed from the left (v)."""

    u: int
    v: int

    def __post_init__(self):
        if self.u < 0 or self.v < 0:
            raise ValueError("offsets must be non-negative")


@dataclass(frozen=True)
class Border:
    """Pixels removed by a crop, kept with enough geometry to stitch back."""

    u: int
    v: int
    top: np.ndarray    # the u full-width top rows
    left: np.ndarray   # the v left columns of the remaining rows

    @property
    def pixel_count(self) -> int:
        return self.top.shape[0] * self.top.shape[1] + self.left.shape[0] * self.left.shape[1]


@dataclass(frozen=True)
class CroppedPair:
    inner: AnyImage
    border: Border


@dataclass(frozen=True)
class BlockGrid:
    """Non-overlapping m x n tiling of an image, plus uncovered remainder strips."""

    block_rows: int
    block_cols: int
    m: int
    n: int
    remainder_rows: int
    remainder_cols: int

    @property
    def block_count(self) -> int:
        return self.block_rows * self.block_cols


def crop(image: AnyImage, offsets: CropOffsets) -> CroppedPair:
    """Split an image into the inner sub-image and the removed border."""
    u, v = offsets.u, offsets.v
    h, w = image.height, image.width
    if u >= h or v >= w:
        raise OffsetsTooLarge(f"offsets ({u}, {v}) leave no pixels of a {w}x{h} image")
    px = image.pixels
    border = Border(u=u, v=v, top=px[:u].copy(), left=px[u:, :v].copy())
    inner = type(image)(px[u:, v:].copy())
    return CroppedPair(inner=inner, border=border)


def stitch(inner: AnyImage, border: Border) -> AnyImage:
    """Rebuild the original image from an inner image and its border record."""
    u, v = border.u, border.v
    h = u + inner.height
    w = v + inner.width
    if border.top.ndim != inner.pixels.ndim or border.left.ndim != inner.pixels.ndim:
        raise GeometryMismatch("border and inner channel counts differ")
    if border.top.shape[0] != u or (u > 0 and border.top.shape[1] != w):
        raise GeometryMismatch("top border does not span the full width")
    if border.left.shape[:2] != (inner.height, v):
        raise GeometryMismatch("left border does not match inner height")
    shape = (h, w) if inner.pixels.ndim == 2 else (h, w, 3)
    out = np.empty(shape, dtype=np.uint8)
    out[:u] = border.top
    out[u:, :v] = border.left
    out[u:, v:] = inner.pixels
    return type(inner)(out)


def partition(image: AnyImage, m: int, n: int) -> BlockGrid:
    """Describe the m x n full-block tiling of an image."""
    if m < 2 or n < 2:
        raise ValueError("block dimensions must be at least 2")
    rows = image.height // m
    cols = image.width // n
    if rows == 0 or cols == 0:
        raise BlockTooLarge(
            f"no {m}x{n} block fits in a {image.width}x{image.height} image")
    return BlockGrid(
        block_rows=rows,
        block_cols=cols,
        m=m,
        n=n,
        remainder_rows=image.height - rows * m,
        remainder_cols=image.width - cols * n,
    )


def stack_blocks(plane: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Covered region of a 2-D plane as a (block_count, m, n) stack, row-major."""
    r, c, m, n = grid.block_rows, grid.block_cols, grid.m, grid.n
    covered = plane[:r * m, :c * n]
    return covered.reshape(r, m, c, n).swapaxes(1, 2).reshape(r * c, m, n)


def scatter_blocks(plane: np.ndarray, grid: BlockGrid, blocks: np.ndarray) -> None:
    """Write a (block_count, m, n) stack back into the covered region, in place."""
    r, c, m, n = grid.block_rows, grid.block_cols, grid.m, grid.n
    plane[:r * m, :c * n] = blocks.reshape(r, c, m, n).swapaxes(1, 2).reshape(r * m, c * n)


# ---------------------------------------------------------------------------
# ITU-R BT.601 full-range color conversion

def _round8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def _luma_float(rgb: np.ndarray) -> np.ndarray:
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    return 0.299 * r + 0.587 * g + 0.114 * b


def rgb_to_ycbcr(image: ColorImage) -> tuple[GrayImage, np.ndarray, np.ndarray]:
    """Split an RGB image into a luma plane and 8-bit Cb/Cr planes."""
    px = image.pixels.astype(np.float64)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return GrayImage(_round8(y)), _round8(cb), _round8(cr)


def ycbcr_to_rgb(luma: GrayImage, cb: np.ndarray, cr: np.ndarray) -> ColorImage:
    """Recombine luma and chroma planes into RGB (max round-trip error 1 per sample)."""
    y = luma.pixels.astype(np.float64)
    cbf = cb.astype(np.float64) - 128.0
    crf = cr.astype(np.float64) - 128.0
    r = y + 1.402 * crf
    g = y - 0.344136 * cbf - 0.714136 * crf
    b = y + 1.772 * cbf
    return ColorImage(np.stack([_round8(r), _round8(g), _round8(b)], axis=-1))


# offsets tried, in order, when the direct inverse misses the target luma
_NUDGES = np.array([(dr, dg, db)
                    for dg in (0, -1, 1)
                    for dr in (0, -1, 1)
                    for db in (0, -1, 1)], dtype=np.int16)


def replace_luma(color: ColorImage, new_luma: GrayImage) -> ColorImage:
    """Rebuild RGB so its rounded luma equals `new_luma` wherever possible.

    Pixels whose luma is unchanged are copied verbatim. Changed pixels are
    reconstructed from (new_luma, Cb, Cr); if 8-bit rounding lands the luma
    off target, the nearest +-1 RGB nudge that hits the target exactly (with
    least chroma disturbance) is used. Unreachable targets (gamut clamping)
    keep the closest luma found; callers that need exactness must verify.
    """
    if new_luma.pixels.shape != color.pixels.shape[:2]:
        raise GeometryMismatch("luma plane does not match image dimensions")
    old_luma, cb, cr = rgb_to_ycbcr(color)
    out = color.pixels.copy()
    changed = new_luma.pixels != old_luma.pixels
    if not changed.any():
        return ColorImage(out)

    cand = ycbcr_to_rgb(new_luma, cb, cr).pixels
    out[changed] = cand[changed]
    back = _round8(_luma_float(out))
    bad = changed & (back != new_luma.pixels)
    if not bad.any():
        return ColorImage(out)

    # small search over +-1 nudges for the stubborn pixels
    base = out[bad].astype(np.int16)                       # (k, 3)
    target = new_luma.pixels[bad].astype(np.float64)       # (k,)
    want_cb = cb[bad].astype(np.float64)
    want_cr = cr[bad].astype(np.float64)
    trials = np.clip(base[:, None, :] + _NUDGES[None, :, :], 0, 255)  # (k, 27, 3)
    luma_t = _round8(_luma_float(trials)).astype(np.float64)
    tf = trials.astype(np.float64)
    got_cb = 128.0 - 0.168736 * tf[..., 0] - 0.331264 * tf[..., 1] + 0.5 * tf[..., 2]
    got_cr = 128.0 + 0.5 * tf[..., 0] - 0.418688 * tf[..., 1] - 0.081312 * tf[..., 2]
    chroma_err = (got_cb - want_cb[:, None]) ** 2 + (got_cr - want_cr[:, None]) ** 2
    luma_err = np.abs(luma_t - target[:, None])
    # exact luma first, then smallest chroma disturbance, then candidate order
    rank = luma_err * 1e6 + chroma_err
    pick = rank.argmin(axis=1)
    out[bad] = trials[np.arange(len(pick)), pick].astype(np.uint8)
    return ColorImage(out)


# ---------------------------------------------------------------------------
# File I/O

def load_image(path) -> AnyImage:
    """Load an 8-bit grayscale or RGB raster file."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return GrayImage(np.asarray(im, dtype=np.uint8))
            if mode == "RGB":
                return ColorImage(np.asarray(im, dtype=np.uint8))
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(str(exc)) from exc
    except (OSError, SyntaxError) as exc:
        raise IoFailure(str(exc)) from exc
    raise UnsupportedFormat(f"unsupported pixel mode {mode!r} (need L or RGB)")


def save_lossless(image: AnyImage, path) -> None:
    """Write as PNG; load_image(path) returns bit-identical samples."""
    mode = "L" if isinstance(image, GrayImage) else "RGB"
    try:
        Image.fromarray(image.pixels, mode).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def save_jpeg(image: AnyImage, path, quality: int) -> None:
    """Write as baseline sequential JPEG without chroma subsampling."""
    if not 1 <= quality <= 100:
        raise ValueError("quality must be in [1, 100]")
    mode = "L" if isinstance(image, GrayImage) else "RGB"
    try:
        Image.fromarray(image.pixels, mode).save(
            path, format="JPEG", quality=quality, subsampling=0)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
