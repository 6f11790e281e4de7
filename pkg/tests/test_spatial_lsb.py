import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdsa import spatial_lsb
from sdsa.bitstream import BitStream
from sdsa.errors import PayloadExceedsCapacity
from sdsa.imgmodel import GrayImage

KEY = bytes(range(16))


def _cover(h=100, w=100, seed=0):
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, (h, w), dtype=np.uint8))


def _bits(n, seed=1):
    rng = np.random.default_rng(seed)
    return BitStream(rng.integers(0, 2, n).astype(np.uint8))


def test_replace_roundtrip_1000_bits():
    cover, payload = _cover(), _bits(1000)
    stego = spatial_lsb.lsb_replace_embed(cover, payload, KEY)
    assert spatial_lsb.lsb_extract(stego, 1000, KEY) == payload


def test_replace_only_touches_lsbs():
    cover, payload = _cover(seed=2), _bits(5000, seed=3)
    stego = spatial_lsb.lsb_replace_embed(cover, payload, KEY)
    assert ((stego.pixels & 0xFE) == (cover.pixels & 0xFE)).all()
    assert np.abs(stego.pixels.astype(int) - cover.pixels.astype(int)).max() <= 1


def test_replace_fixed_point():
    cover = _cover(seed=4)
    existing = spatial_lsb.lsb_extract(cover, 800, KEY)
    stego = spatial_lsb.lsb_replace_embed(cover, existing, KEY)
    assert np.array_equal(stego.pixels, cover.pixels)


def test_match_leaves_matching_pixels_alone():
    cover = _cover(seed=5)
    existing = spatial_lsb.lsb_extract(cover, 1200, KEY)
    stego = spatial_lsb.lsb_match_embed(cover, existing, KEY, rng_seed=9)
    assert np.array_equal(stego.pixels, cover.pixels)


def test_match_boundary_clamps():
    flat = GrayImage(np.zeros((10, 10), dtype=np.uint8))
    ones = BitStream(np.ones(100, dtype=np.uint8))
    stego = spatial_lsb.lsb_match_embed(flat, ones, KEY, rng_seed=0)
    assert set(np.unique(stego.pixels)) == {1}  # 0 can only move up

    bright = GrayImage(np.full((10, 10), 255, dtype=np.uint8))
    zeros = BitStream(np.zeros(100, dtype=np.uint8))
    stego = spatial_lsb.lsb_match_embed(bright, zeros, KEY, rng_seed=0)
    assert set(np.unique(stego.pixels)) == {254}  # 255 can only move down


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 2000))
def test_match_roundtrip_and_step_bound(seed, nbits):
    cover = _cover(seed=seed % 1000)
    payload = BitStream(np.random.default_rng(seed).integers(0, 2, nbits).astype(np.uint8))
    stego = spatial_lsb.lsb_match_embed(cover, payload, KEY, rng_seed=seed)
    assert np.abs(stego.pixels.astype(int) - cover.pixels.astype(int)).max() <= 1
    assert spatial_lsb.lsb_extract(stego, nbits, KEY) == payload


def test_match_uses_both_directions():
    cover = GrayImage(np.full((50, 50), 100, dtype=np.uint8))
    ones = BitStream(np.ones(2500, dtype=np.uint8))
    stego = spatial_lsb.lsb_match_embed(cover, ones, KEY, rng_seed=1)
    assert set(np.unique(stego.pixels)) == {99, 101}


def test_wrong_key_extracts_noise():
    cover, payload = _cover(128, 128, seed=6), _bits(10_000, seed=7)
    stego = spatial_lsb.lsb_replace_embed(cover, payload, KEY)
    other = spatial_lsb.lsb_extract(stego, 10_000, bytes(range(1, 17)))
    error = (other.bits != payload.bits).mean()
    assert 0.45 <= error <= 0.55


def test_capacity_enforced():
    cover = _cover(10, 10)
    assert spatial_lsb.capacity(cover) == 100
    with pytest.raises(PayloadExceedsCapacity):
        spatial_lsb.lsb_replace_embed(cover, _bits(101), KEY)
    with pytest.raises(PayloadExceedsCapacity):
        spatial_lsb.lsb_match_embed(cover, _bits(101), KEY)
