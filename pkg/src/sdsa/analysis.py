"""Quality and detectability measurement.

PSNR, the calibration-attack statistic (8x8-grid DCT mode histograms of an
image against its cropped re-analysis), a harness comparing synchronized-grid
embedding against the desynchronized scheme, and bit-error rate after JPEG
recompression.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .aescore import ctr_keystream
from .bitstream import BitStream
from .dctq import STANDARD_LUMA_QUANT, dct2, quantize
from .desync import (
    StegoParams,
    capacity,
    nonzero_coefficients,
    sdsa_embed,
    sdsa_extract,
)
from .errors import DimensionMismatch, ImageTooSmall
from .imgmodel import (
    AnyImage,
    ColorImage,
    CropOffsets,
    GrayImage,
    load_image,
    rgb_to_ycbcr,
    save_jpeg,
    save_lossless,
)

# low-frequency AC modes whose value histograms form the feature vector
FEATURE_MODES = ((0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1), (0, 3), (3, 0))
_BIN_RANGE = 8          # values clipped into [-8, 8], 17 bins per mode
_CALIBRATION_CROP = 4   # rows and columns removed for the calibrated reference
_TRIAL_NONCE = b"detect-trial"
_PAYLOAD_NONCE = b"detect-bits\x00"


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(f"{a.pixels.shape} vs {b.pixels.shape}")
    mse = np.mean((a.pixels.astype(np.float64) - b.pixels.astype(np.float64)) ** 2)
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def as_luma(image: AnyImage) -> GrayImage:
    if isinstance(image, ColorImage):
        return rgb_to_ycbcr(image)[0]
    return image


def feature_histograms(image: GrayImage, quant: np.ndarray = STANDARD_LUMA_QUANT) -> np.ndarray:
    """Per-mode normalized histograms of quantized 8x8-grid DCT values, (9, 17)."""
    px = image.pixels
    bh, bw = px.shape[0] // 8, px.shape[1] // 8
    if bh == 0 or bw == 0:
        raise ImageTooSmall("need at least one 8x8 block")
    blocks = (px[:bh * 8, :bw * 8].reshape(bh, 8, bw, 8).swapaxes(1, 2)
              .reshape(-1, 8, 8).astype(np.float64) - 128.0)
    coeffs = quantize(dct2(blocks), quant)
    out = np.zeros((len(FEATURE_MODES), 2 * _BIN_RANGE + 1))
    for i, (r, c) in enumerate(FEATURE_MODES):
        vals = np.clip(coeffs[:, r, c], -_BIN_RANGE, _BIN_RANGE)
        hist = np.bincount((vals + _BIN_RANGE).astype(np.intp),
                           minlength=2 * _BIN_RANGE + 1).astype(np.float64)
        out[i] = hist / hist.sum()
    return out


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """L1 distance between two feature histogram stacks."""
    return float(np.abs(a - b).sum())


def calibrate(image: GrayImage) -> GrayImage:
    """Cropped re-analysis reference: remove 4 top rows and 4 left columns."""
    if image.height < 12 or image.width < 12:
        raise ImageTooSmall("calibration needs at least a 12x12 image")
    return GrayImage(image.pixels[_CALIBRATION_CROP:, _CALIBRATION_CROP:].copy())


def calibration_distance(image: GrayImage, quant: np.ndarray = STANDARD_LUMA_QUANT) -> float:
    """Distance between an image's features and its calibrated reference's."""
    return feature_distance(feature_histograms(image, quant),
                            feature_histograms(calibrate(image), quant))


@dataclass(frozen=True)
class CalibrationReport:
    """Calibration distance of a stego image next to the cover's own baseline."""

    scheme: str
    distance: float
    cover_baseline: float
    payload_bits: int


def _trial_payload(trial_key: bytes, nbits: int) -> BitStream:
    raw = ctr_keystream(trial_key, _PAYLOAD_NONCE, (nbits + 7) // 8)
    return BitStream(np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:nbits])


def detectability(cover: AnyImage, params: StegoParams, payload_rate: float,
                  trials: int = 8) -> dict[str, CalibrationReport]:
    """Calibration distances for synchronized-grid embedding vs this scheme.

    Both schemes carry the same payload size: payload_rate bits per usable
    (non-zero) coefficient, clamped to both capacities. The synchronized
    baseline embeds on the standard 8x8 grid with the standard quantization
    table, which is exactly the grid the calibration attack analyzes. To keep
    the comparison out of sampling noise, the feature histograms are averaged
    over several embeddings keyed deterministically from the shared secret.
    """
    if payload_rate < 0:
        raise ValueError("payload_rate must be >= 0")
    luma = as_luma(cover)
    sync_params = replace(params, offsets=CropOffsets(0, 0), block=(8, 8),
                          quality=50, q_matrix=None)
    usable = min(nonzero_coefficients(cover, params),
                 nonzero_coefficients(cover, sync_params))
    nbits = min(int(payload_rate * usable),
                capacity(cover, params), capacity(cover, sync_params))

    baseline = calibration_distance(luma)
    trial_keys = ctr_keystream(params.key, _TRIAL_NONCE, 16 * trials)
    sums = {name: [0.0, 0.0] for name in ("synchronized", "sdsa")}
    for t in range(trials):
        key = trial_keys[16 * t:16 * (t + 1)]
        payload = _trial_payload(key, nbits)
        for name, p in (("synchronized", replace(sync_params, key=key)),
                        ("sdsa", replace(params, key=key))):
            stego = as_luma(sdsa_embed(cover, p, payload).image)
            sums[name][0] = sums[name][0] + feature_histograms(stego)
            sums[name][1] = sums[name][1] + feature_histograms(calibrate(stego))
    out = {}
    for name, (f_img, f_cal) in sums.items():
        d = feature_distance(f_img / trials, f_cal / trials)
        out[name] = CalibrationReport(scheme=name, distance=d,
                                      cover_baseline=baseline, payload_bits=nbits)
    return out


def ber_after_jpeg(cover: AnyImage, params: StegoParams, payload: BitStream,
                   quality: int | None) -> float:
    """Fraction of payload bits flipped by a save/load cycle of the stego image.

    quality None uses the lossless container (BER is exactly 0 there); an
    integer recompresses as baseline JPEG. Bits the recompressed carrier can
    no longer address are excluded from the denominator; if nothing can be
    read back the rate is 1.0.
    """
    stego = sdsa_embed(cover, params, payload)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "stego.png" if quality is None else "stego.jpg")
        if quality is None:
            save_lossless(stego.image, path)
        else:
            save_jpeg(stego.image, path, quality)
        received = load_image(path)
    got = sdsa_extract(received, params, len(payload))
    n = min(len(got), len(payload))
    if n == 0:
        return 1.0
    return float((got.bits[:n] != payload.bits[:n]).mean())
