"""AES (Rijndael) block cipher with CBC and counter modes.

The block core is vectorized with numpy so counter-mode keystreams and
CBC decryption run batched. Table lookups are not constant time; this is
a desk-scale tool, not a hardened crypto library.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import BadKeyLength, BadPadding

ROUNDS_BY_KEYLEN = {16: 10, 24: 12, 32: 14}


def _build_tables():
    # GF(2^8) exp/log over generator 3, modulus x^8+x^4+x^3+x+1
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x ^= (x << 1) ^ (0x11B if x & 0x80 else 0)
    for i in range(255, 512):
        exp[i] = exp[i - 255]

    def gmul(a, b):
        if a == 0 or b == 0:
            return 0
        return exp[log[a] + log[b]]

    sbox = [0] * 256
    for i in range(256):
        inv = exp[255 - log[i]] if i else 0
        s = 0
        for shift in range(5):
            s ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox[i] = s ^ 0x63
    inv_sbox = [0] * 256
    for i, s in enumerate(sbox):
        inv_sbox[s] = i

    muls = {c: np.array([gmul(c, i) for i in range(256)], dtype=np.uint8)
            for c in (2, 3, 9, 11, 13, 14)}
    return np.array(sbox, dtype=np.uint8), np.array(inv_sbox, dtype=np.uint8), muls


SBOX, INV_SBOX, _MUL = _build_tables()
_RCON = [1]
while len(_RCON) < 14:
    r = _RCON[-1] << 1
    _RCON.append((r ^ 0x11B) & 0xFF if r & 0x100 else r)

# fancy-index maps for ShiftRows: new[r, c] = old[r, (c + r) % 4]
_ROWS = np.repeat(np.arange(4), 4).reshape(4, 4)
_SHIFT_COLS = (np.arange(4)[None, :] + np.arange(4)[:, None]) % 4
_UNSHIFT_COLS = (np.arange(4)[None, :] - np.arange(4)[:, None]) % 4


@dataclass(frozen=True)
class RoundKeySchedule:
    """Expanded round keys as (rounds + 1) 4x4 column-major matrices."""

    round_keys: np.ndarray
    rounds: int

    def __len__(self) -> int:
        return self.rounds + 1


def key_expand(key: bytes) -> RoundKeySchedule:
    """Expand a 16/24/32-byte key into the full round key schedule."""
    if len(key) not in ROUNDS_BY_KEYLEN:
        raise BadKeyLength(f"key must be 16, 24 or 32 bytes, got {len(key)}")
    nk = len(key) // 4
    rounds = ROUNDS_BY_KEYLEN[len(key)]
    words = [list(key[4 * i:4 * i + 4]) for i in range(nk)]
    for i in range(nk, 4 * (rounds + 1)):
        temp = list(words[i - 1])
        if i % nk == 0:
            temp = temp[1:] + temp[:1]
            temp = [int(SBOX[b]) for b in temp]
            temp[0] ^= _RCON[i // nk - 1]
        elif nk > 6 and i % nk == 4:
            temp = [int(SBOX[b]) for b in temp]
        words.append([a ^ b for a, b in zip(words[i - nk], temp)])
    rk = np.zeros((rounds + 1, 4, 4), dtype=np.uint8)
    for r in range(rounds + 1):
        for col in range(4):
            for row in range(4):
                rk[r, row, col] = words[4 * r + col][row]
    return RoundKeySchedule(round_keys=rk, rounds=rounds)


def _to_states(data: np.ndarray) -> np.ndarray:
    # byte i of a block sits at state[i % 4, i // 4]
    return data.reshape(-1, 4, 4).swapaxes(1, 2)


def _from_states(states: np.ndarray) -> np.ndarray:
    return states.swapaxes(1, 2).reshape(-1, 16)


def _mix_columns(s: np.ndarray) -> np.ndarray:
    a, b, c, d = s[:, 0, :], s[:, 1, :], s[:, 2, :], s[:, 3, :]
    return np.stack([
        _MUL[2][a] ^ _MUL[3][b] ^ c ^ d,
        a ^ _MUL[2][b] ^ _MUL[3][c] ^ d,
        a ^ b ^ _MUL[2][c] ^ _MUL[3][d],
        _MUL[3][a] ^ b ^ c ^ _MUL[2][d],
    ], axis=1)


def _inv_mix_columns(s: np.ndarray) -> np.ndarray:
    a, b, c, d = s[:, 0, :], s[:, 1, :], s[:, 2, :], s[:, 3, :]
    return np.stack([
        _MUL[14][a] ^ _MUL[11][b] ^ _MUL[13][c] ^ _MUL[9][d],
        _MUL[9][a] ^ _MUL[14][b] ^ _MUL[11][c] ^ _MUL[13][d],
        _MUL[13][a] ^ _MUL[9][b] ^ _MUL[14][c] ^ _MUL[11][d],
        _MUL[11][a] ^ _MUL[13][b] ^ _MUL[9][c] ^ _MUL[14][d],
    ], axis=1)


def encrypt_blocks(data: np.ndarray, schedule: RoundKeySchedule) -> np.ndarray:
    """Encrypt a batch of 16-byte blocks, shape (n, 16) -> (n, 16)."""
    rk = schedule.round_keys
    s = _to_states(np.ascontiguousarray(data, dtype=np.uint8))
    s = s ^ rk[0]
    for r in range(1, schedule.rounds):
        s = SBOX[s]
        s = s[:, _ROWS, _SHIFT_COLS]
        s = _mix_columns(s)
        s = s ^ rk[r]
    s = SBOX[s]
    s = s[:, _ROWS, _SHIFT_COLS]
    s = s ^ rk[schedule.rounds]
    return _from_states(s)


def decrypt_blocks(data: np.ndarray, schedule: RoundKeySchedule) -> np.ndarray:
    """Decrypt a batch of 16-byte blocks, shape (n, 16) -> (n, 16)."""
    rk = schedule.round_keys
    s = _to_states(np.ascontiguousarray(data, dtype=np.uint8))
    s = s ^ rk[schedule.rounds]
    for r in range(schedule.rounds - 1, 0, -1):
        s = s[:, _ROWS, _UNSHIFT_COLS]
        s = INV_SBOX[s]
        s = s ^ rk[r]
        s = _inv_mix_columns(s)
    s = s[:, _ROWS, _UNSHIFT_COLS]
    s = INV_SBOX[s]
    s = s ^ rk[0]
    return _from_states(s)


def encrypt_block(block: bytes, schedule: RoundKeySchedule) -> bytes:
    if len(block) != 16:
        raise ValueError("block must be 16 bytes")
    return encrypt_blocks(np.frombuffer(block, dtype=np.uint8)[None, :], schedule).tobytes()


def decrypt_block(block: bytes, schedule: RoundKeySchedule) -> bytes:
    if len(block) != 16:
        raise ValueError("block must be 16 bytes")
    return decrypt_blocks(np.frombuffer(block, dtype=np.uint8)[None, :], schedule).tobytes()


def cbc_encrypt(plaintext: bytes, key: bytes, iv: bytes | None = None) -> bytes:
    """CBC encrypt with PKCS#7 padding; returns iv || ciphertext."""
    schedule = key_expand(key)
    if iv is None:
        iv = os.urandom(16)
    if len(iv) != 16:
        raise ValueError("iv must be 16 bytes")
    pad = 16 - len(plaintext) % 16
    padded = np.frombuffer(plaintext + bytes([pad]) * pad, dtype=np.uint8).reshape(-1, 16)
    out = np.empty_like(padded)
    prev = np.frombuffer(iv, dtype=np.uint8)
    for i in range(padded.shape[0]):
        prev = encrypt_blocks((padded[i] ^ prev)[None, :], schedule)[0]
        out[i] = prev
    return iv + out.tobytes()


def cbc_decrypt(data: bytes, key: bytes) -> bytes:
    """Reverse cbc_encrypt; raises BadPadding on a bad pad (wrong key or corruption)."""
    schedule = key_expand(key)
    if len(data) < 32 or len(data) % 16 != 0:
        raise BadPadding("ciphertext too short or not block aligned")
    buf = np.frombuffer(data, dtype=np.uint8).reshape(-1, 16)
    plain = decrypt_blocks(buf[1:], schedule) ^ buf[:-1]
    plain = plain.tobytes()
    pad = plain[-1]
    if not 1 <= pad <= 16 or plain[-pad:] != bytes([pad]) * pad:
        raise BadPadding("invalid padding")
    return plain[:-pad]


def ctr_keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    """Deterministic keystream: AES(nonce || 32-bit big-endian counter), counter from 0.

    Prefix-consistent: the first k bytes do not depend on the requested length.
    """
    if len(nonce) != 12:
        raise ValueError("nonce must be 12 bytes")
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return b""
    schedule = key_expand(key)
    nblocks = (length + 15) // 16
    out = bytearray()
    base = np.frombuffer(nonce, dtype=np.uint8)
    for start in range(0, nblocks, 4096):
        count = min(4096, nblocks - start)
        counters = np.arange(start, start + count, dtype=np.uint32)
        blocks = np.empty((count, 16), dtype=np.uint8)
        blocks[:, :12] = base
        blocks[:, 12:] = counters.astype(">u4").view(np.uint8).reshape(-1, 4)
        out += encrypt_blocks(blocks, schedule).tobytes()
    return bytes(out[:length])


class KeystreamRandom:
    """Unbiased deterministic integers drawn from a counter-mode keystream."""

    _CHUNK = 1 << 14

    def __init__(self, key: bytes, nonce: bytes):
        if len(nonce) != 12:
            raise ValueError("nonce must be 12 bytes")
        self._schedule = key_expand(key)
        self._nonce = np.frombuffer(nonce, dtype=np.uint8)
        self._counter = 0
        self._buf = np.zeros(0, dtype=np.uint32)
        self._pos = 0

    def _refill(self) -> None:
        count = self._CHUNK
        counters = np.arange(self._counter, self._counter + count, dtype=np.uint32)
        self._counter += count
        blocks = np.empty((count, 16), dtype=np.uint8)
        blocks[:, :12] = self._nonce
        blocks[:, 12:] = counters.astype(">u4").view(np.uint8).reshape(-1, 4)
        raw = encrypt_blocks(blocks, self._schedule)
        self._buf = raw.reshape(-1).view(np.uint32).byteswap()
        self._pos = 0

    def _next_u32(self) -> int:
        if self._pos >= len(self._buf):
            self._refill()
        v = int(self._buf[self._pos])
        self._pos += 1
        return v

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        limit = (1 << 32) - ((1 << 32) % n)
        while True:
            v = self._next_u32()
            if v < limit:
                return v % n


def keyed_prefix_permutation(count: int, take: int, rng: KeystreamRandom) -> np.ndarray:
    """First `take` entries of a keyed Fisher-Yates permutation of range(count).

    Sparse bookkeeping keeps this O(take) regardless of count.
    """
    if take > count:
        raise ValueError("take exceeds count")
    moved: dict[int, int] = {}
    out = np.empty(take, dtype=np.int64)
    for i in range(take):
        j = i + rng.randbelow(count - i)
        out[i] = moved.get(j, j)
        moved[j] = moved.get(i, i)
    return out
