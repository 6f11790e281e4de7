"""Payload pipeline: plaintext -> AES-CBC ciphertext -> framed bit stream.

Frame layout (normative, bit-exact across implementations):

    magic   4 bytes  "SDSA"
    version 1 byte   0x01
    length  4 bytes  big-endian ciphertext byte count
    crc32   4 bytes  big-endian IEEE CRC-32 over the ciphertext
    payload          iv || CBC ciphertext

Bits serialize MSB-first. The CRC guards against channel corruption (a lossy
container), not active tampering; authenticity is out of scope.
"""

from __future__ import annotations

import struct
import zlib
from typing import Callable

from .aescore import cbc_encrypt, cbc_decrypt
from .bitstream import BitStream
from .errors import BadCrc, BadMagic, IoFailure

MAGIC = b"SDSA"
VERSION = 1
HEADER_BYTES = 13
HEADER_BITS = HEADER_BYTES * 8


def encode_payload(plaintext: bytes, key: bytes, iv: bytes | None = None) -> BitStream:
    """Encrypt and frame a message; total frame is 13 + len(iv || ct) bytes."""
    if not plaintext:
        raise ValueError("plaintext must be non-empty")
    ciphertext = cbc_encrypt(plaintext, key, iv)
    frame = (MAGIC + bytes([VERSION])
             + struct.pack(">I", len(ciphertext))
             + struct.pack(">I", zlib.crc32(ciphertext))
             + ciphertext)
    return BitStream.from_bytes(frame)


def _parse_header(header: bytes) -> tuple[int, int]:
    if header[:4] != MAGIC:
        raise BadMagic("no payload frame found (wrong key, params, or not a stego image)")
    if header[4] != VERSION:
        raise BadMagic(f"unsupported frame version {header[4]}")
    length, crc = struct.unpack(">II", header[5:13])
    return length, crc


def decode_payload(bits: BitStream, key: bytes) -> bytes:
    """Verify and decrypt a framed bit stream back to the original message."""
    if len(bits) < HEADER_BITS:
        raise BadMagic("bit stream shorter than a frame header")
    stream = BitStream(bits.bits[:len(bits) - len(bits) % 8])
    data = stream.to_bytes()
    length, crc = _parse_header(data[:HEADER_BYTES])
    if len(data) < HEADER_BYTES + length:
        raise BadCrc(f"frame truncated: header claims {length} ciphertext bytes")
    ciphertext = data[HEADER_BYTES:HEADER_BYTES + length]
    if zlib.crc32(ciphertext) != crc:
        raise BadCrc("ciphertext checksum mismatch")
    return cbc_decrypt(ciphertext, key)


def recover_payload(fetch: Callable[[int], BitStream], key: bytes) -> bytes:
    """Two-phase decode for prefix-consistent extractors.

    `fetch(n)` must return the first n embedded bits (fewer if the carrier
    runs out); the header is read first to learn the full frame size.
    """
    head = fetch(HEADER_BITS)
    if len(head) < HEADER_BITS:
        raise BadMagic("carrier holds fewer bits than a frame header")
    length, _ = _parse_header(head.to_bytes())
    return decode_payload(fetch((HEADER_BYTES + length) * 8), key)


def encode_text_file(path, key: bytes) -> BitStream:
    """Frame the raw bytes of a file; content is opaque (UTF-8 not required)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return encode_payload(data, key)


def decode_to_text_file(bits: BitStream, key: bytes, path) -> int:
    """Decode a framed stream and write the recovered bytes; returns the count."""
    data = decode_payload(bits, key)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return len(data)
