"""Spatial-domain baselines: LSB replacement and LSB matching.

Pixels are visited in a keyed pseudo-random order (Fisher-Yates prefix over
the counter-mode keystream), so the embedding footprint is not contiguous.
The same extraction routine serves both schemes.
"""

from __future__ import annotations

import numpy as np

from .aescore import KeystreamRandom, keyed_prefix_permutation
from .bitstream import BitStream
from .errors import PayloadExceedsCapacity
from .imgmodel import GrayImage

# fixed stream labels; pixel order must be recoverable from the key alone
_ORDER_NONCE = b"lsb-order\x00\x00\x00"
_SIGN_NONCE_PREFIX = b"lsb-sign"


def _pixel_order(key: bytes, pixel_count: int, take: int) -> np.ndarray:
    rng = KeystreamRandom(key, _ORDER_NONCE)
    return keyed_prefix_permutation(pixel_count, take, rng)


def capacity(cover: GrayImage) -> int:
    """One bit per pixel."""
    return cover.width * cover.height


def lsb_replace_embed(cover: GrayImage, bits: BitStream, key: bytes) -> GrayImage:
    """Overwrite the LSB of keyed-order pixels with the message bits."""
    if len(bits) > capacity(cover):
        raise PayloadExceedsCapacity(f"{len(bits)} bits > {capacity(cover)} pixels")
    flat = cover.pixels.copy().ravel()
    idx = _pixel_order(key, flat.size, len(bits))
    flat[idx] = (flat[idx] & 0xFE) | bits.bits
    return GrayImage(flat.reshape(cover.pixels.shape))


def lsb_match_embed(cover: GrayImage, bits: BitStream, key: bytes,
                    rng_seed: int = 0) -> GrayImage:
    """Adjust mismatched pixels by +-1 instead of overwriting the LSB.

    The +-1 direction comes from a seeded keystream, except at the value
    boundaries where 0 is forced up and 255 forced down. Pixels whose LSB
    already matches are left alone, so no pixel ever moves by more than 1.
    """
    if len(bits) > capacity(cover):
        raise PayloadExceedsCapacity(f"{len(bits)} bits > {capacity(cover)} pixels")
    flat = cover.pixels.copy().ravel()
    idx = _pixel_order(key, flat.size, len(bits))
    cur = flat[idx].astype(np.int16)
    mismatch = (cur & 1) != bits.bits

    n_changes = int(mismatch.sum())
    if n_changes:
        sign_rng = KeystreamRandom(key, _SIGN_NONCE_PREFIX + rng_seed.to_bytes(4, "big"))
        delta = np.array([1 if sign_rng.randbelow(2) else -1 for _ in range(n_changes)],
                         dtype=np.int16)
        vals = cur[mismatch]
        delta[vals == 0] = 1
        delta[vals == 255] = -1
        cur[mismatch] = vals + delta
        flat[idx] = cur.astype(np.uint8)
    return GrayImage(flat.reshape(cover.pixels.shape))


def lsb_extract(stego: GrayImage, bit_count: int, key: bytes) -> BitStream:
    """Read LSBs back in the same keyed pixel order."""
    if bit_count > capacity(stego):
        raise PayloadExceedsCapacity(f"{bit_count} bits > {capacity(stego)} pixels")
    flat = stego.pixels.ravel()
    idx = _pixel_order(key, flat.size, bit_count)
    return BitStream(flat[idx] & 1)
