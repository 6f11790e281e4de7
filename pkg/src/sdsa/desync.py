"""Embedding in quantized DCT coefficients of a cropped, desynchronized block grid.

The embedding grid starts (u, v) pixels from the image origin and uses m x n
blocks, so it is not aligned with the standard 8x8 analysis grid. One payload
bit goes into the parity of each quantized AC coefficient of magnitude >= 2,
walking blocks in a keyed pseudo-random order and coefficients in zigzag
order. Magnitudes never drop below 2 and never change sign, so the eligible
set is the same whether it is computed from the cover or from the stego
image; that is what lets the extractor re-derive the exact bit positions.

Writing integer coefficients back through IDCT, pixel rounding and clamping
can perturb them, so every written block is re-read through the exact pixel
path the extractor will use and re-adjusted until it verifies (bounded number
of passes). A block that refuses to stabilize is demoted instead: its AC
magnitudes are pushed below 2 so the extractor sees zero capacity there and
skips it, keeping the bit streams aligned. The terminal fallback (flatten the
block to its mean) always verifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aescore import ROUNDS_BY_KEYLEN, KeystreamRandom, keyed_prefix_permutation
from .bitstream import BitStream
from .dctq import ac_zigzag_indices, dct2, dequantize, derive_q, idct2, quantize
from .errors import (
    BadKeyLength,
    BlockTooLarge,
    NotEnoughBlocks,
    OffsetsTooLarge,
    PayloadExceedsCapacity,
)
from .imgmodel import (
    AnyImage,
    ColorImage,
    CropOffsets,
    GrayImage,
    crop,
    partition,
    replace_luma,
    rgb_to_ycbcr,
    scatter_blocks,
    stack_blocks,
    stitch,
)

SCHEME_PLUS_MINUS = "plus_minus_one_coeff"
SCHEME_LSB_REPLACE = "lsb_replace_coeff"
COEFF_SCHEMES = (SCHEME_PLUS_MINUS, SCHEME_LSB_REPLACE)

_MAX_PASSES = 8

# Coefficients whose real magnitude falls within this band (in Q units) of the
# |q| = 1.5 eligibility boundary get pinned to their quantization grid point.
# Mild recompression noise then cannot flip their eligibility, which would
# insert or delete a slot and desynchronize every later payload bit.
_ELIGIBILITY_GUARD = 0.3


@dataclass(frozen=True)
class StegoParams:
    """The shared secret. Every field, including geometry, stays private."""

    key: bytes
    offsets: CropOffsets = CropOffsets(4, 4)
    block: tuple[int, int] = (9, 9)
    quality: int | None = 70
    q_matrix: np.ndarray | None = None
    coeff_scheme: str = SCHEME_PLUS_MINUS
    selection_nonce: bytes = b"\x00" * 12

    def __post_init__(self):
        if len(self.key) not in ROUNDS_BY_KEYLEN:
            raise BadKeyLength(f"key must be 16, 24 or 32 bytes, got {len(self.key)}")
        m, n = self.block
        if m < 2 or n < 2:
            raise ValueError("block dimensions must be at least 2")
        if (self.quality is None) == (self.q_matrix is None):
            raise ValueError("exactly one of quality or q_matrix must be set")
        if self.quality is not None and not 1 <= self.quality <= 100:
            raise ValueError("quality must be in [1, 100]")
        if self.q_matrix is not None and self.q_matrix.shape != (m, n):
            raise ValueError("custom Q matrix must match the block dimensions")
        if self.coeff_scheme not in COEFF_SCHEMES:
            raise ValueError(f"unknown coefficient scheme {self.coeff_scheme!r}")
        if len(self.selection_nonce) != 12:
            raise ValueError("selection nonce must be 12 bytes")

    def quant_matrix(self) -> np.ndarray:
        m, n = self.block
        if self.q_matrix is not None:
            return self.q_matrix
        return derive_q(m, n, self.quality)

    def selection_key(self) -> bytes:
        # Block order is keyed by the nonce, not the AES key: with the right
        # geometry but a wrong decryption key the receiver still locates the
        # frame and fails at decrypt, keeping the two secrecy layers separate.
        return self.selection_nonce + self.selection_nonce[:4]


@dataclass(frozen=True)
class BlockSelection:
    """Keyed visiting order over block indices; deterministic given the secret."""

    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class StegoImage:
    image: AnyImage
    container: str = "lossless"


def select_blocks(block_count: int, needed: int, key: bytes, nonce: bytes) -> BlockSelection:
    """First `needed` entries of a keyed Fisher-Yates permutation of the blocks."""
    if needed > block_count:
        raise NotEnoughBlocks(f"need {needed} of {block_count} blocks")
    rng = KeystreamRandom(key, nonce)
    return BlockSelection(keyed_prefix_permutation(block_count, needed, rng))


# ---------------------------------------------------------------------------
# shared pipeline front end

@dataclass
class _Prepared:
    is_color: bool
    border: object
    inner_rgb: np.ndarray | None     # (H', W', 3) cover RGB inside the crop
    luma: np.ndarray                 # (H', W') cover luma inside the crop
    grid: object
    q: np.ndarray
    zz_r: np.ndarray
    zz_c: np.ndarray
    blocks: np.ndarray               # (B, m, n) uint8 cover luma blocks
    real_coeff: np.ndarray           # (B, m, n) float64 unquantized coefficients
    coeff: np.ndarray                # (B, m, n) int64 quantized cover coefficients
    ac: np.ndarray                   # (B, k) AC values in zigzag order
    eligible: np.ndarray             # (B, k) bool, |ac| >= 2
    near_boundary: np.ndarray        # (B, k) bool, real value close to |q| = 1.5
    rgb_blocks: np.ndarray | None = field(default=None)


def _prepare(image: AnyImage, params: StegoParams) -> _Prepared:
    m, n = params.block
    u, v = params.offsets.u, params.offsets.v
    if image.height - u < m or image.width - v < n:
        if image.height < m or image.width < n:
            raise BlockTooLarge(
                f"{m}x{n} blocks do not fit a {image.width}x{image.height} image")
        raise OffsetsTooLarge(
            f"offsets ({u}, {v}) leave no full {m}x{n} block in a "
            f"{image.width}x{image.height} image")
    pair = crop(image, params.offsets)

    if isinstance(pair.inner, ColorImage):
        luma_img, _, _ = rgb_to_ycbcr(pair.inner)
        luma = luma_img.pixels
        inner_rgb = pair.inner.pixels
        is_color = True
    else:
        luma = pair.inner.pixels
        inner_rgb = None
        is_color = False

    grid = partition(GrayImage(luma), m, n)
    q = params.quant_matrix()
    zz_r, zz_c = ac_zigzag_indices(m, n)
    blocks = stack_blocks(luma, grid)
    real_coeff = dct2(blocks.astype(np.float64) - 128.0)
    coeff = quantize(real_coeff, q)
    ac = coeff[:, zz_r, zz_c]
    eligible = np.abs(ac) >= 2
    q_zz = q[zz_r, zz_c].astype(np.float64)
    ratio = np.abs(real_coeff[:, zz_r, zz_c]) / q_zz
    near_boundary = np.abs(ratio - 1.5) <= _ELIGIBILITY_GUARD

    prep = _Prepared(is_color=is_color, border=pair.border, inner_rgb=inner_rgb,
                     luma=luma, grid=grid, q=q, zz_r=zz_r, zz_c=zz_c,
                     blocks=blocks, real_coeff=real_coeff, coeff=coeff, ac=ac,
                     eligible=eligible, near_boundary=near_boundary)
    if is_color:
        prep.rgb_blocks = np.stack(
            [stack_blocks(inner_rgb[..., ch], grid) for ch in range(3)], axis=-1)
    return prep


def capacity(cover: AnyImage, params: StegoParams) -> int:
    """Embeddable bits: AC coefficients of magnitude >= 2 across all full blocks."""
    return int(_prepare(cover, params).eligible.sum())


def nonzero_coefficients(cover: AnyImage, params: StegoParams) -> int:
    """Count of non-zero quantized AC coefficients (the usable-coefficient pool)."""
    return int((_prepare(cover, params).ac != 0).sum())


def _adjusted_magnitudes(mag: np.ndarray, bits: np.ndarray, scheme: str) -> np.ndarray:
    bits = bits.astype(np.int64)
    if scheme == SCHEME_PLUS_MINUS:
        # step toward zero, except magnitude 2 which must step up to stay eligible
        return np.where((mag & 1) == bits, mag, np.where(mag == 2, 3, mag - 1))
    return (mag & ~np.int64(1)) | bits


def _reconstruct_pixels(targets: np.ndarray, q: np.ndarray) -> np.ndarray:
    real = idct2(dequantize(targets, q)) + 128.0
    return np.clip(np.rint(real), 0, 255).astype(np.uint8)


class _Materializer:
    """Turns candidate luma blocks into the pixels the extractor will see."""

    def __init__(self, prep: _Prepared):
        self._prep = prep

    def __call__(self, rows: np.ndarray, cand_luma: np.ndarray):
        """Returns (actual_luma, rgb_blocks_or_None) for the given block rows."""
        if not self._prep.is_color:
            return cand_luma, None
        m, n = cand_luma.shape[1], cand_luma.shape[2]
        t = len(rows)
        # replace_luma and the color transforms are pixel-local, so stacking
        # the blocks into one tall image computes every block at once
        tall_rgb = self._prep.rgb_blocks[rows].reshape(t * m, n, 3)
        tall_luma = cand_luma.reshape(t * m, n)
        out_rgb = replace_luma(ColorImage(tall_rgb), GrayImage(tall_luma)).pixels
        actual, _, _ = rgb_to_ycbcr(ColorImage(out_rgb))
        return actual.pixels.reshape(t, m, n), out_rgb.reshape(t, m, n, 3)


def _verify(ac2: np.ndarray, eligible: np.ndarray, assigned: np.ndarray,
            target_ac: np.ndarray) -> np.ndarray:
    """Per-row flag: eligibility pattern intact and assigned parities correct."""
    mag2 = np.abs(ac2)
    ok_elig = ((mag2 >= 2) == eligible).all(axis=1)
    parity_ok = (mag2 & 1) == (np.abs(target_ac) & 1)
    ok_bits = np.where(assigned, parity_ok, True).all(axis=1)
    return ok_elig & ok_bits


def _stabilize(prep: _Prepared, rows: np.ndarray, target_ac: np.ndarray,
               assigned: np.ndarray, materialize: _Materializer):
    """Write targets, re-read through the pixel path, re-adjust until verified.

    Blocks are rebuilt from their real (unquantized) coefficients with only
    the pinned positions replaced by dequantized targets, so coefficients
    that carry no bits keep full precision and the distortion stays close to
    the parity adjustments alone. Any position the pixel rounding pushes
    across an eligibility or parity boundary gets pinned on the next pass;
    repeated offenders are pushed harder so the rounding noise re-rolls.

    Returns (ok, luma_blocks, rgb_blocks) with per-row success flags; pixel
    outputs are only meaningful where ok is True.
    """
    q, zz_r, zz_c = prep.q, prep.zz_r, prep.zz_c
    q_zz = q[zz_r, zz_c].astype(np.float64)
    eligible = prep.eligible[rows]
    cover_ac = prep.ac[rows]
    real = prep.real_coeff[rows].copy()
    # bit positions plus boundary-guard positions get grid values; the rest
    # keep their exact coefficients
    pinned = assigned | prep.near_boundary[rows]
    target_ac = target_ac.copy()

    count = len(rows)
    ok = np.zeros(count, dtype=bool)
    out_luma = np.zeros_like(prep.blocks[rows])
    out_rgb = np.zeros((count,) + prep.blocks.shape[1:] + (3,), dtype=np.uint8) \
        if prep.is_color else None
    active = np.arange(count)

    for it in range(_MAX_PASSES):
        work = real[active].copy()
        acv = work[:, zz_r, zz_c]
        pin = pinned[active]
        acv[pin] = (target_ac[active].astype(np.float64) * q_zz)[pin]
        work[:, zz_r, zz_c] = acv
        cand = np.clip(np.rint(idct2(work) + 128.0), 0, 255).astype(np.uint8)
        actual, rgb = materialize(rows[active], cand)

        achieved_real = dct2(actual.astype(np.float64) - 128.0)
        ac2 = quantize(achieved_real, q)[:, zz_r, zz_c]
        good = _verify(ac2, eligible[active], assigned[active], target_ac[active])

        done = active[good]
        ok[done] = True
        out_luma[done] = actual[good]
        if rgb is not None:
            out_rgb[done] = rgb[good]
        if good.all():
            active = active[~good]
            break

        # keep what the pixels actually achieved, then pin the violations
        real[active] = achieved_real
        active = active[~good]
        ac2 = ac2[~good]
        mag2 = np.abs(ac2)
        elig_now = mag2 >= 2
        elig_want = eligible[active]
        prev = target_ac[active]
        sign_prev = np.where(prev < 0, -1, 1)
        mag_prev = np.abs(prev)
        boost = min(2 * it, 6)

        spurious = elig_now & ~elig_want
        dropped = ~elig_now & elig_want
        parity_bad = elig_now & elig_want & assigned[active] & ((mag2 & 1) != (mag_prev & 1))

        new_ac = prev.copy()
        new_ac[spurious] = cover_ac[active][spurious] if it == 0 else 0
        reassert = sign_prev * (mag_prev + boost)
        new_ac[dropped] = reassert[dropped]
        new_ac[parity_bad] = reassert[parity_bad]
        target_ac[active] = new_ac
        pinned[active] |= spurious | dropped | parity_bad

    return ok, out_luma, out_rgb


def _demote_block(prep: _Prepared, row: int, materialize: _Materializer):
    """Push every AC magnitude below 2 so the extractor reads zero bits here."""
    q, zz_r, zz_c = prep.q, prep.zz_r, prep.zz_c
    q_zz = q[zz_r, zz_c].astype(np.float64)
    limit = (1.5 - _ELIGIBILITY_GUARD) * q_zz
    rows = np.array([row])
    target_ac = np.clip(prep.ac[row], -1, 1)[None, :]
    targets = prep.coeff[rows].copy()

    for _ in range(_MAX_PASSES):
        targets[:, zz_r, zz_c] = target_ac
        cand = _reconstruct_pixels(targets, q)
        actual, rgb = materialize(rows, cand)
        achieved_real = dct2(actual.astype(np.float64) - 128.0)
        real_ac = achieved_real[:, zz_r, zz_c]
        if (np.abs(real_ac) <= limit).all():
            return actual[0], None if rgb is None else rgb[0]
        achieved = quantize(achieved_real, q)
        ac2 = achieved[:, zz_r, zz_c]
        target_ac = np.where(np.abs(real_ac) > limit, 0, ac2)
        targets = achieved

    # flatten to the block mean; a constant block has identically zero AC
    c = int(np.clip(np.rint(prep.blocks[row].mean()), 0, 255))
    flat = np.full_like(prep.blocks[row], c)
    if prep.is_color:
        rgb = np.full(flat.shape + (3,), c, dtype=np.uint8)
    else:
        rgb = None
    ac2 = quantize(dct2(flat[None].astype(np.float64) - 128.0), q)[:, zz_r, zz_c]
    if not (np.abs(ac2) < 2).all():
        raise RuntimeError("flat block failed to verify; quantizer broken")
    return flat, rgb


def _assemble(prep: _Prepared, luma_blocks: np.ndarray,
              rgb_blocks: np.ndarray | None, container: str) -> StegoImage:
    if prep.is_color:
        inner = prep.inner_rgb.copy()
        for ch in range(3):
            plane = inner[..., ch].copy()
            scatter_blocks(plane, prep.grid, rgb_blocks[..., ch])
            inner[..., ch] = plane
        stego_inner: AnyImage = ColorImage(inner)
    else:
        plane = prep.luma.copy()
        scatter_blocks(plane, prep.grid, luma_blocks)
        stego_inner = GrayImage(plane)
    return StegoImage(image=stitch(stego_inner, prep.border), container=container)


def sdsa_embed(cover: AnyImage, params: StegoParams, payload: BitStream) -> StegoImage:
    """Hide a bit stream in the cover; pure function of (cover, params, payload)."""
    prep = _prepare(cover, params)
    total_capacity = int(prep.eligible.sum())
    nbits = len(payload)
    if nbits > total_capacity:
        raise PayloadExceedsCapacity(
            f"payload of {nbits} bits exceeds capacity of {total_capacity} bits")

    out_luma = prep.blocks.copy()
    out_rgb = prep.rgb_blocks.copy() if prep.is_color else None
    if nbits == 0:
        return _assemble(prep, out_luma, out_rgb, "lossless")

    order = select_blocks(len(prep.blocks), len(prep.blocks),
                          params.selection_key(), params.selection_nonce).indices
    materialize = _Materializer(prep)
    bits = payload.bits.astype(np.int64)

    # optimistic pass: assign bits assuming no block gets demoted, stabilize
    # every touched block as one batch; blocks up to the exhaustion point are
    # also touched when they hold boundary-guard positions
    elig_sel = prep.eligible[order]
    flat_slots = np.flatnonzero(elig_sel.ravel())[:nbits]
    k = prep.ac.shape[1]
    last_sel_pos = int(flat_slots[-1] // k)

    target_ac = prep.ac[order].copy()
    vals = target_ac.ravel()[flat_slots]
    sign = np.where(vals < 0, -1, 1)
    new_mag = _adjusted_magnitudes(np.abs(vals), bits, params.coeff_scheme)
    target_ac.ravel()[flat_slots] = sign * new_mag
    assigned = np.zeros_like(elig_sel)
    assigned.ravel()[flat_slots] = True

    visited = np.zeros(len(order), dtype=bool)
    visited[:last_sel_pos + 1] = True
    touch = visited & (assigned.any(axis=1) | prep.near_boundary[order].any(axis=1))
    touched = np.flatnonzero(touch)
    rows = order[touched]

    ok, luma_blks, rgb_blks = _stabilize(
        prep, rows, target_ac[touched], assigned[touched], materialize)
    if ok.all():
        out_luma[rows] = luma_blks
        if prep.is_color:
            out_rgb[rows] = rgb_blks
        return _assemble(prep, out_luma, out_rgb, "lossless")

    # fallback: some block would not stabilize; walk sequentially so its bits
    # can be re-routed to later blocks after the block is demoted
    cursor = 0
    for sel_pos in range(len(order)):
        if cursor >= nbits:
            break
        row = int(order[sel_pos])
        elig_row = prep.eligible[row]
        width = int(elig_row.sum())
        take = min(width, nbits - cursor)
        if take == 0 and not prep.near_boundary[row].any():
            continue
        chunk = bits[cursor:cursor + take]

        t_ac = prep.ac[row].copy()
        slot_idx = np.flatnonzero(elig_row)[:take]
        vals = t_ac[slot_idx]
        sign = np.where(vals < 0, -1, 1)
        t_ac[slot_idx] = sign * _adjusted_magnitudes(np.abs(vals), chunk,
                                                     params.coeff_scheme)
        a_row = np.zeros_like(elig_row)
        a_row[slot_idx] = True

        ok, luma_blks, rgb_blks = _stabilize(
            prep, np.array([row]), t_ac[None, :], a_row[None, :], materialize)
        if ok[0]:
            out_luma[row] = luma_blks[0]
            if prep.is_color:
                out_rgb[row] = rgb_blks[0]
            cursor += take
        else:
            out_luma[row], rgb_blk = _demote_block(prep, row, materialize)
            if prep.is_color:
                out_rgb[row] = rgb_blk
    if cursor < nbits:
        raise PayloadExceedsCapacity(
            f"payload of {nbits} bits exceeds stable capacity ({cursor} bits fit)")
    return _assemble(prep, out_luma, out_rgb, "lossless")


def sdsa_extract(stego: AnyImage | StegoImage, params: StegoParams,
                 bit_count: int) -> BitStream:
    """Read back up to bit_count bits; mirror of the embedding walk."""
    if isinstance(stego, StegoImage):
        stego = stego.image
    if bit_count < 0:
        raise ValueError("bit_count must be >= 0")
    prep = _prepare(stego, params)
    order = select_blocks(len(prep.blocks), len(prep.blocks),
                          params.selection_key(), params.selection_nonce).indices
    ac_sel = prep.ac[order]
    elig_sel = prep.eligible[order]
    slots = np.flatnonzero(elig_sel.ravel())[:bit_count]
    parities = (np.abs(ac_sel.ravel()[slots]) & 1).astype(np.uint8)
    return BitStream(parities)
