"""Ordered bit sequence with a read cursor, MSB-first byte packing."""

from __future__ import annotations

import numpy as np


class BitStream:
    """Sequence of bits that is read back in exactly the order it was written."""

    def __init__(self, bits=None):
        if bits is None:
            self._bits = np.zeros(0, dtype=np.uint8)
        else:
            arr = np.asarray(bits, dtype=np.uint8)
            if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
                raise ValueError("bits must be a flat sequence of 0/1")
            self._bits = arr.copy()
        self._cursor = 0

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitStream":
        return cls(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))

    def to_bytes(self) -> bytes:
        if len(self._bits) % 8 != 0:
            raise ValueError("bit count not a multiple of 8")
        return np.packbits(self._bits).tobytes()

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def write(self, bits) -> None:
        arr = np.asarray(bits, dtype=np.uint8)
        self._bits = np.concatenate([self._bits, arr])

    def read(self, count: int) -> np.ndarray:
        if self._cursor + count > len(self._bits):
            raise ValueError("read past end of stream")
        out = self._bits[self._cursor:self._cursor + count]
        self._cursor += count
        return out

    @property
    def remaining(self) -> int:
        return len(self._bits) - self._cursor

    def __len__(self) -> int:
        return len(self._bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __repr__(self) -> str:
        return f"BitStream({len(self._bits)} bits, cursor={self._cursor})"
