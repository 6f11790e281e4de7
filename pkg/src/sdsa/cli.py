"""Command-line surface: keygen, embed, extract, capacity, psnr, analyze, berscan.

Secrets live only in the shared-secret file (never in argv); its path comes
from --secret or the SDSA_SECRET environment variable. Output files are
written to a temp file and renamed, so no command leaves a partial file.

Exit codes: 0 ok, 2 usage or bad secret file, 3 payload too large, 4 image
errors, 5 no payload frame (wrong geometry or not a stego image), 6 frame
checksum failure (corruption), 7 bad padding (wrong key).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import secrets as _secrets
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import analysis, codec, spatial_lsb
from .aescore import ctr_keystream, encrypt_block, key_expand
from .bitstream import BitStream
from .desync import (
    COEFF_SCHEMES,
    SCHEME_PLUS_MINUS,
    StegoParams,
    capacity,
    sdsa_embed,
    sdsa_extract,
)
from .dctq import load_quant_file
from .errors import (
    BadCrc,
    BadKeyLength,
    BadMagic,
    BadPadding,
    PayloadExceedsCapacity,
    SecretFileError,
    StegoError,
)
from .imgmodel import ColorImage, CropOffsets, GrayImage, load_image, save_jpeg, save_lossless

SPATIAL_SCHEMES = ("lsb_replace", "lsb_match")
ALL_SCHEMES = COEFF_SCHEMES + SPATIAL_SCHEMES

EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_IMAGE = 4
EXIT_MAGIC = 5
EXIT_CRC = 6
EXIT_PADDING = 7

_SECRET_FIELDS = ("key_hex", "u", "v", "m", "n", "quality", "q_file", "scheme", "nonce_hex")


@dataclass
class SharedSecretFile:
    """Flat key=value record holding everything both parties must share."""

    key_hex: str
    u: int
    v: int
    m: int
    n: int
    scheme: str
    nonce_hex: str
    quality: int | None = None
    q_file: str | None = None

    def key(self) -> bytes:
        try:
            key = bytes.fromhex(self.key_hex)
        except ValueError as exc:
            raise SecretFileError("key_hex is not valid hex") from exc
        if len(key) not in (16, 24, 32):
            raise SecretFileError("key_hex must be 32, 48 or 64 hex characters")
        return key

    def nonce(self) -> bytes:
        try:
            nonce = bytes.fromhex(self.nonce_hex)
        except ValueError as exc:
            raise SecretFileError("nonce_hex is not valid hex") from exc
        if len(nonce) != 12:
            raise SecretFileError("nonce_hex must be 24 hex characters")
        return nonce

    def to_params(self) -> StegoParams:
        if self.scheme in SPATIAL_SCHEMES:
            raise SecretFileError(f"scheme {self.scheme} has no DCT parameters")
        try:
            return StegoParams(
                key=self.key(),
                offsets=CropOffsets(self.u, self.v),
                block=(self.m, self.n),
                quality=self.quality,
                q_matrix=load_quant_file(self.q_file) if self.q_file else None,
                coeff_scheme=self.scheme,
                selection_nonce=self.nonce(),
            )
        except (ValueError, BadKeyLength) as exc:
            raise SecretFileError(str(exc)) from exc


def parse_secret_text(text: str) -> SharedSecretFile:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SecretFileError(f"line {lineno}: expected key=value")
        k, _, v = line.partition("=")
        k, v = k.strip(), v.strip()
        if k not in _SECRET_FIELDS:
            raise SecretFileError(f"line {lineno}: unknown key {k!r}")
        if k in values:
            raise SecretFileError(f"line {lineno}: duplicate key {k!r}")
        values[k] = v
    for required in ("key_hex", "u", "v", "m", "n", "scheme", "nonce_hex"):
        if required not in values:
            raise SecretFileError(f"missing required key {required!r}")
    if ("quality" in values) == ("q_file" in values):
        raise SecretFileError("exactly one of quality or q_file must be present")
    if values["scheme"] not in ALL_SCHEMES:
        raise SecretFileError(f"unknown scheme {values['scheme']!r}")
    try:
        u, v, m, n = (int(values[k]) for k in ("u", "v", "m", "n"))
        quality = int(values["quality"]) if "quality" in values else None
    except ValueError as exc:
        raise SecretFileError(f"non-integer numeric field: {exc}") from exc
    return SharedSecretFile(
        key_hex=values["key_hex"].lower(), u=u, v=v, m=m, n=n,
        scheme=values["scheme"], nonce_hex=values["nonce_hex"].lower(),
        quality=quality, q_file=values.get("q_file"),
    )


def format_secret(sec: SharedSecretFile) -> str:
    lines = [f"key_hex={sec.key_hex}", f"u={sec.u}", f"v={sec.v}",
             f"m={sec.m}", f"n={sec.n}"]
    if sec.q_file is not None:
        lines.append(f"q_file={sec.q_file}")
    else:
        lines.append(f"quality={sec.quality}")
    lines += [f"scheme={sec.scheme}", f"nonce_hex={sec.nonce_hex}"]
    return "\n".join(lines) + "\n"


def load_secret(path_arg: str | None) -> SharedSecretFile:
    path = path_arg or os.environ.get("SDSA_SECRET")
    if not path:
        raise SecretFileError("no secret file: pass --secret or set SDSA_SECRET")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_secret_text(fh.read())
    except OSError as exc:
        raise SecretFileError(f"cannot read secret file: {exc}") from exc


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sdsa-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save_image(image, path: str, jpeg_quality: int | None) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sdsa-tmp-")
    os.close(fd)
    try:
        if jpeg_quality is None:
            save_lossless(image, tmp)
        else:
            save_jpeg(image, tmp, jpeg_quality)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _deterministic_iv(key: bytes, message: bytes) -> bytes:
    # same secret + same message -> same stego file (the CLI contract is full
    # determinism given the secret); the PRP keeps the IV unpredictable
    digest = hashlib.sha256(message).digest()[:16]
    return encrypt_block(digest, key_expand(key))


def _spatial_cover(image) -> GrayImage:
    if isinstance(image, ColorImage):
        raise StegoError("spatial LSB schemes need a grayscale cover")
    return image


def _spatial_seed(sec: SharedSecretFile) -> int:
    return int.from_bytes(sec.nonce()[:4], "big")


def _spatial_order_key(sec: SharedSecretFile) -> bytes:
    # same layering as the DCT path: pixel order comes from the nonce so a
    # wrong AES key fails at decrypt (exit 7), not at frame discovery
    nonce = sec.nonce()
    return nonce + nonce[:4]


def cmd_keygen(args) -> int:
    sec = SharedSecretFile(
        key_hex=_secrets.token_bytes(args.bits // 8).hex(),
        u=4, v=4, m=9, n=9, quality=70,
        scheme=SCHEME_PLUS_MINUS,
        nonce_hex=_secrets.token_bytes(12).hex(),
    )
    _atomic_write_bytes(args.out, format_secret(sec).encode())
    os.chmod(args.out, 0o600)
    print(f"secret_file={args.out}")
    print(f"key_bits={args.bits}")
    return 0


def cmd_embed(args) -> int:
    sec = load_secret(args.secret)
    if args.text is not None:
        message = args.text.encode()
    else:
        with open(args.message, "rb") as fh:
            message = fh.read()
    if not message:
        print("error: message is empty", file=sys.stderr)
        return EXIT_USAGE
    cover = load_image(args.cover)
    bits = codec.encode_payload(message, sec.key(),
                                iv=_deterministic_iv(sec.key(), message))

    if sec.scheme in SPATIAL_SCHEMES:
        gray = _spatial_cover(cover)
        available = spatial_lsb.capacity(gray)
        if len(bits) > available:
            raise PayloadExceedsCapacity(f"{len(bits)} bits > {available} bits")
        if sec.scheme == "lsb_replace":
            stego_img = spatial_lsb.lsb_replace_embed(gray, bits, _spatial_order_key(sec))
        else:
            stego_img = spatial_lsb.lsb_match_embed(gray, bits, _spatial_order_key(sec),
                                                    rng_seed=_spatial_seed(sec))
    else:
        params = sec.to_params()
        available = capacity(cover, params)
        if len(bits) > available:
            raise PayloadExceedsCapacity(f"{len(bits)} bits > {available} bits")
        stego_img = sdsa_embed(cover, params, bits).image

    if args.jpeg is not None:
        print("lossy container: payload integrity not guaranteed", file=sys.stderr)
    _atomic_save_image(stego_img, args.out, args.jpeg)
    print(f"capacity_available_bits={available}")
    print(f"capacity_used_bits={len(bits)}")
    return 0


def cmd_extract(args) -> int:
    sec = load_secret(args.secret)
    stego = load_image(args.stego)
    if sec.scheme in SPATIAL_SCHEMES:
        gray = _spatial_cover(stego)
        order_key = _spatial_order_key(sec)
        fetch = lambda n: spatial_lsb.lsb_extract(gray, min(n, spatial_lsb.capacity(gray)),
                                                  order_key)
    else:
        params = sec.to_params()
        fetch = lambda n: sdsa_extract(stego, params, n)
    plaintext = codec.recover_payload(fetch, sec.key())
    _atomic_write_bytes(args.out, plaintext)
    print(f"plaintext_bytes={len(plaintext)}")
    return 0


def cmd_capacity(args) -> int:
    sec = load_secret(args.secret)
    cover = load_image(args.cover)
    if sec.scheme in SPATIAL_SCHEMES:
        bits = spatial_lsb.capacity(_spatial_cover(cover))
    else:
        bits = capacity(cover, sec.to_params())
    print(f"capacity_bits={bits}")
    return 0


def _fmt(value: float) -> str:
    return "inf" if value == float("inf") else f"{value:.4f}"


def cmd_psnr(args) -> int:
    a = analysis.as_luma(load_image(args.image_a))
    b = analysis.as_luma(load_image(args.image_b))
    print(f"psnr_db={_fmt(analysis.psnr(a, b))}")
    return 0


def cmd_analyze(args) -> int:
    sec = load_secret(args.secret)
    cover = load_image(args.cover)
    reports = analysis.detectability(cover, sec.to_params(), args.rate,
                                     trials=args.trials)
    print(f"payload_bits={reports['sdsa'].payload_bits}")
    print(f"d_cover={reports['sdsa'].cover_baseline:.6f}")
    print(f"d_synchronized={reports['synchronized'].distance:.6f}")
    print(f"d_sdsa={reports['sdsa'].distance:.6f}")
    return 0


def cmd_berscan(args) -> int:
    sec = load_secret(args.secret)
    cover = load_image(args.cover)
    params = sec.to_params()
    nbits = min(args.bits, capacity(cover, params))
    raw = ctr_keystream(sec.key(), b"berscan-bits", (nbits + 7) // 8)
    payload = BitStream(np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:nbits])
    print(f"payload_bits={nbits}")
    print(f"ber_lossless={analysis.ber_after_jpeg(cover, params, payload, None):.6f}")
    for quality in args.qualities:
        ber = analysis.ber_after_jpeg(cover, params, payload, quality)
        print(f"ber_q{quality}={ber:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdsa",
        description="AES-encrypted steganography with a desynchronized DCT grid")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a fresh shared-secret file")
    p.add_argument("out")
    p.add_argument("--bits", type=int, choices=(128, 192, 256), default=128)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="hide an encrypted message in a cover image")
    p.add_argument("cover")
    p.add_argument("out")
    p.add_argument("--secret", help="shared-secret file (default: $SDSA_SECRET)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--message", help="path of the file to hide")
    src.add_argument("--text", help="literal message text")
    p.add_argument("--jpeg", type=int, metavar="QUALITY",
                   help="write a JPEG container instead of lossless PNG")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover the hidden message")
    p.add_argument("stego")
    p.add_argument("out")
    p.add_argument("--secret")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("capacity", help="payload capacity of a cover under a secret")
    p.add_argument("cover")
    p.add_argument("--secret")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("psnr", help="peak signal-to-noise ratio between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("analyze", help="calibration-attack comparison harness")
    p.add_argument("cover")
    p.add_argument("--secret")
    p.add_argument("--rate", type=float, default=0.05,
                   help="payload bits per usable coefficient")
    p.add_argument("--trials", type=int, default=8,
                   help="keyed embeddings averaged per scheme")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("berscan", help="bit-error rate across JPEG qualities")
    p.add_argument("cover")
    p.add_argument("qualities", nargs="+", type=int)
    p.add_argument("--secret")
    p.add_argument("--bits", type=int, default=2000)
    p.set_defaults(func=cmd_berscan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SecretFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PayloadExceedsCapacity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except BadMagic as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MAGIC
    except BadCrc as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CRC
    except BadPadding as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PADDING
    except (StegoError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMAGE


if __name__ == "__main__":
    sys.exit(main())
