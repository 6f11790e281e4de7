"""Orthonormal 2-D DCT on arbitrary block sizes, quantization, and Q derivation."""

from __future__ import annotations

import numpy as np
from scipy import fft as _fft

from .errors import DimensionMismatch, IoFailure

# JPEG luminance quantization table (Annex K), the 8x8 baseline all derived
# matrices are resampled from.
STANDARD_LUMA_QUANT = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)


def dct2(block: np.ndarray) -> np.ndarray:
    """Orthonormal type-II 2-D DCT over the last two axes (batches allowed)."""
    return _fft.dctn(np.asarray(block, dtype=np.float64), axes=(-2, -1), norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of dct2 (orthonormal type-III over the last two axes)."""
    return _fft.idctn(np.asarray(coeffs, dtype=np.float64), axes=(-2, -1), norm="ortho")


def quantize(coeffs: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Entrywise coeff / Q, rounded half away from zero, as integers."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    q = np.asarray(q)
    if coeffs.shape[-2:] != q.shape:
        raise DimensionMismatch(f"coeff block {coeffs.shape[-2:]} vs Q {q.shape}")
    scaled = coeffs / q
    return (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)


def dequantize(values: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Entrywise multiply by Q, back to real coefficients."""
    values = np.asarray(values)
    q = np.asarray(q)
    if values.shape[-2:] != q.shape:
        raise DimensionMismatch(f"coeff block {values.shape[-2:]} vs Q {q.shape}")
    return values.astype(np.float64) * q


def _bilinear_resample(table: np.ndarray, m: int, n: int) -> np.ndarray:
    if (m, n) == table.shape:
        return table.astype(np.float64)
    ys = np.linspace(0.0, table.shape[0] - 1.0, m)
    xs = np.linspace(0.0, table.shape[1] - 1.0, n)
    y0 = np.clip(np.floor(ys).astype(int), 0, table.shape[0] - 2)
    x0 = np.clip(np.floor(xs).astype(int), 0, table.shape[1] - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    t = table.astype(np.float64)
    return (t[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
            + t[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
            + t[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
            + t[np.ix_(y0 + 1, x0 + 1)] * fy * fx)


def derive_q(m: int, n: int, quality: int) -> np.ndarray:
    """Quantization matrix for an m x n block at a JPEG-style quality setting.

    The 8x8 luminance table is bilinearly resampled to m x n, then scaled by
    the usual quality rule; entries are clamped to [1, 255]. At (8, 8) and
    quality 50 this reproduces the standard table exactly.
    """
    if m < 2 or n < 2:
        raise ValueError("block dimensions must be at least 2")
    if not 1 <= quality <= 100:
        raise ValueError("quality must be in [1, 100]")
    base = _bilinear_resample(STANDARD_LUMA_QUANT, m, n)
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    q = np.floor((base * scale + 50.0) / 100.0)
    return np.clip(q, 1, 255).astype(np.int64)


def zigzag_positions(m: int, n: int) -> list[tuple[int, int]]:
    """All (row, col) positions of an m x n block in JPEG zigzag scan order."""
    out = []
    for d in range(m + n - 1):
        if d % 2 == 0:  # even anti-diagonals run bottom-left to top-right
            i = min(d, m - 1)
            while i >= 0 and d - i <= n - 1:
                out.append((i, d - i))
                i -= 1
        else:
            i = max(0, d - n + 1)
            while i <= m - 1 and d - i >= 0:
                out.append((i, d - i))
                i += 1
    return out


def ac_zigzag_indices(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/col index arrays of the AC positions (zigzag order, DC excluded)."""
    pos = zigzag_positions(m, n)[1:]
    rows = np.array([p[0] for p in pos], dtype=np.intp)
    cols = np.array([p[1] for p in pos], dtype=np.intp)
    return rows, cols


def load_quant_file(path) -> np.ndarray:
    """Read a custom Q matrix: first line "m n", then m rows of n integers."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if not lines:
        raise ValueError("empty quantization file")
    try:
        m, n = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise ValueError("first line must be 'm n'") from exc
    if len(lines) != 1 + m:
        raise ValueError(f"expected {m} rows of entries, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        row = [int(tok) for tok in ln.split()]
        if len(row) != n:
            raise ValueError(f"expected {n} entries per row, found {len(row)}")
        rows.append(row)
    q = np.array(rows, dtype=np.int64)
    if (q < 1).any():
        raise ValueError("quantization entries must be >= 1")
    return q
