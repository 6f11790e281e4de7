import os

import numpy as np
import pytest

from sdsa import cli, codec
from sdsa.bitstream import BitStream
from sdsa.cli import SharedSecretFile, format_secret, parse_secret_text
from sdsa.desync import sdsa_embed
from sdsa.errors import SecretFileError
from sdsa.imgmodel import GrayImage, load_image, save_lossless

from conftest import CORPUS_DIR

COVER = str(CORPUS_DIR / "camera.png")


def _write_secret(tmp_path, **overrides):
    sec = SharedSecretFile(
        key_hex="000102030405060708090a0b0c0d0e0f",
        u=4, v=4, m=9, n=9, quality=70,
        scheme="plus_minus_one_coeff",
        nonce_hex="000000000000000000000000",
    )
    for k, v in overrides.items():
        setattr(sec, k, v)
    path = tmp_path / "secret.txt"
    path.write_text(format_secret(sec))
    return str(path)


# ---------------------------------------------------------------------
# secret file format

def test_secret_roundtrip_fixed_point(tmp_path):
    path = _write_secret(tmp_path)
    text = open(path).read()
    sec = parse_secret_text(text)
    assert format_secret(sec) == text
    assert parse_secret_text(format_secret(sec)) == sec


def test_secret_unknown_key_rejected():
    with pytest.raises(SecretFileError):
        parse_secret_text("key_hex=00\nu=0\nv=0\nm=9\nn=9\nquality=70\n"
                          "scheme=plus_minus_one_coeff\nnonce_hex=00\nwat=1\n")


def test_secret_missing_field_rejected():
    with pytest.raises(SecretFileError):
        parse_secret_text("u=0\n")


def test_secret_quality_and_qfile_exclusive(tmp_path):
    base = ("key_hex=000102030405060708090a0b0c0d0e0f\nu=4\nv=4\nm=9\nn=9\n"
            "scheme=plus_minus_one_coeff\nnonce_hex=000000000000000000000000\n")
    with pytest.raises(SecretFileError):
        parse_secret_text(base)  # neither
    with pytest.raises(SecretFileError):
        parse_secret_text(base + "quality=70\nq_file=q.txt\n")  # both


def test_secret_comments_and_blank_lines_ok():
    sec = parse_secret_text(
        "# comment\n\nkey_hex=000102030405060708090a0b0c0d0e0f\nu=1\nv=2\n"
        "m=9\nn=9\nquality=70\nscheme=plus_minus_one_coeff\n"
        "nonce_hex=000000000000000000000000\n")
    assert (sec.u, sec.v) == (1, 2)


def test_secret_bad_key_material(tmp_path):
    path = _write_secret(tmp_path, key_hex="zz")
    assert cli.main(["capacity", COVER, "--secret", path]) == cli.EXIT_USAGE


# ---------------------------------------------------------------------
# keygen

def test_keygen_writes_valid_secret(tmp_path, capsys):
    out = str(tmp_path / "s.txt")
    assert cli.main(["keygen", out, "--bits", "256"]) == 0
    text = capsys.readouterr().out
    assert f"secret_file={out}" in text and "key_bits=256" in text
    sec = parse_secret_text(open(out).read())
    assert len(sec.key_hex) == 64
    assert (sec.u, sec.v, sec.m, sec.n, sec.quality) == (4, 4, 9, 9, 70)


def test_keygen_keys_differ(tmp_path):
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    cli.main(["keygen", a])
    cli.main(["keygen", b])
    assert parse_secret_text(open(a).read()).key_hex != \
        parse_secret_text(open(b).read()).key_hex


def test_keygen_bad_bits_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["keygen", str(tmp_path / "s.txt"), "--bits", "512"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------
# embed / extract

@pytest.mark.parametrize("scheme", ["plus_minus_one_coeff", "lsb_replace_coeff",
                                    "lsb_replace", "lsb_match"])
def test_embed_extract_roundtrip(tmp_path, capsys, scheme):
    secret = _write_secret(tmp_path, scheme=scheme)
    msg = tmp_path / "msg.bin"
    msg.write_bytes(b"meet at the broken bridge at \xf0\x9f\x95\x9b")
    stego = str(tmp_path / "stego.png")
    out = str(tmp_path / "out.bin")
    assert cli.main(["embed", COVER, stego, "--secret", secret,
                     "--message", str(msg)]) == 0
    stdout = capsys.readouterr().out
    assert "capacity_available_bits=" in stdout and "capacity_used_bits=" in stdout
    assert cli.main(["extract", stego, out, "--secret", secret]) == 0
    assert open(out, "rb").read() == msg.read_bytes()


def test_embed_extract_with_custom_q_file(tmp_path):
    qpath = tmp_path / "q.txt"
    rows = [[11 + ((i * 9 + j) % 23) for j in range(9)] for i in range(9)]
    qpath.write_text("9 9\n" + "\n".join(" ".join(map(str, r)) for r in rows) + "\n")
    secret = _write_secret(tmp_path, quality=None, q_file=str(qpath))
    stego = str(tmp_path / "stego.png")
    out = str(tmp_path / "out.txt")
    assert cli.main(["embed", COVER, stego, "--secret", secret,
                     "--text", "custom table"]) == 0
    assert cli.main(["extract", stego, out, "--secret", secret]) == 0
    assert open(out).read() == "custom table"


def test_embed_is_deterministic(tmp_path):
    secret = _write_secret(tmp_path)
    a, b = str(tmp_path / "a.png"), str(tmp_path / "b.png")
    cli.main(["embed", COVER, a, "--secret", secret, "--text", "same message"])
    cli.main(["embed", COVER, b, "--secret", secret, "--text", "same message"])
    assert np.array_equal(load_image(a).pixels, load_image(b).pixels)


def test_embed_text_flag(tmp_path, capsys):
    secret = _write_secret(tmp_path)
    stego = str(tmp_path / "stego.png")
    out = str(tmp_path / "out.txt")
    assert cli.main(["embed", COVER, stego, "--secret", secret,
                     "--text", "short and sweet"]) == 0
    assert cli.main(["extract", stego, out, "--secret", secret]) == 0
    assert open(out).read() == "short and sweet"


def test_oversize_message_exit_3_no_output(tmp_path):
    secret = _write_secret(tmp_path)
    msg = tmp_path / "big.bin"
    msg.write_bytes(os.urandom(20_000))  # well past camera's ~16.8 kbit capacity
    stego = tmp_path / "stego.png"
    assert cli.main(["embed", COVER, str(stego), "--secret", secret,
                     "--message", str(msg)]) == cli.EXIT_CAPACITY
    assert not stego.exists()


def test_jpeg_container_warns(tmp_path, capsys):
    secret = _write_secret(tmp_path)
    stego = str(tmp_path / "stego.jpg")
    assert cli.main(["embed", COVER, stego, "--secret", secret,
                     "--text", "x", "--jpeg", "40"]) == 0
    assert "lossy container: payload integrity not guaranteed" in capsys.readouterr().err


def test_wrong_geometry_exit_5(tmp_path):
    secret = _write_secret(tmp_path)
    stego = str(tmp_path / "stego.png")
    out = tmp_path / "out.bin"
    cli.main(["embed", COVER, stego, "--secret", secret, "--text", "hello"])
    wrong = _write_secret(tmp_path, u=5)
    assert cli.main(["extract", stego, str(out), "--secret", wrong]) == cli.EXIT_MAGIC
    assert not out.exists()


def test_wrong_key_exit_7(tmp_path):
    secret = _write_secret(tmp_path)
    stego = str(tmp_path / "stego.png")
    out = tmp_path / "out.bin"
    cli.main(["embed", COVER, stego, "--secret", secret, "--text", "hello"])
    wrong = _write_secret(tmp_path, key_hex="100102030405060708090a0b0c0d0e0f")
    assert cli.main(["extract", stego, str(out), "--secret", wrong]) == cli.EXIT_PADDING
    assert not out.exists()


def test_corrupted_frame_exit_6(tmp_path):
    # re-embed a frame with one flipped ciphertext bit: magic survives, CRC fails
    secret = _write_secret(tmp_path)
    sec = parse_secret_text(open(secret).read())
    params = sec.to_params()
    cover = load_image(COVER)
    bits = codec.encode_payload(b"tamper target", sec.key())
    flipped = bits.bits.copy()
    flipped[codec.HEADER_BITS + 11] ^= 1
    stego = sdsa_embed(cover, params, BitStream(flipped))
    path = str(tmp_path / "bad.png")
    save_lossless(stego.image, path)
    assert cli.main(["extract", path, str(tmp_path / "out.bin"),
                     "--secret", secret]) == cli.EXIT_CRC


def test_extract_non_stego_exit_5(tmp_path):
    secret = _write_secret(tmp_path)
    assert cli.main(["extract", COVER, str(tmp_path / "out.bin"),
                     "--secret", secret]) == cli.EXIT_MAGIC


def test_env_var_supplies_secret(tmp_path, monkeypatch, capsys):
    secret = _write_secret(tmp_path)
    monkeypatch.setenv("SDSA_SECRET", secret)
    assert cli.main(["capacity", COVER]) == 0
    assert capsys.readouterr().out.startswith("capacity_bits=")


def test_no_secret_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.delenv("SDSA_SECRET", raising=False)
    assert cli.main(["capacity", COVER]) == cli.EXIT_USAGE


# ---------------------------------------------------------------------
# measurement commands

def test_psnr_identical(capsys):
    assert cli.main(["psnr", COVER, COVER]) == 0
    assert capsys.readouterr().out.strip() == "psnr_db=inf"


def test_capacity_constant_cover(tmp_path, capsys):
    flat = tmp_path / "flat.png"
    save_lossless(GrayImage(np.full((64, 64), 200, dtype=np.uint8)), flat)
    secret = _write_secret(tmp_path)
    assert cli.main(["capacity", str(flat), "--secret", secret]) == 0
    assert capsys.readouterr().out.strip() == "capacity_bits=0"


def test_capacity_spatial_scheme(tmp_path, capsys):
    secret = _write_secret(tmp_path, scheme="lsb_replace")
    assert cli.main(["capacity", COVER, "--secret", secret]) == 0
    assert capsys.readouterr().out.strip() == f"capacity_bits={512 * 512}"


def test_analyze_prints_distances(tmp_path, capsys):
    secret = _write_secret(tmp_path)
    assert cli.main(["analyze", COVER, "--secret", secret, "--rate", "0.01", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert "d_synchronized=" in out and "d_sdsa=" in out and "d_cover=" in out


def test_berscan_prints_rates(tmp_path, capsys):
    secret = _write_secret(tmp_path)
    assert cli.main(["berscan", COVER, "95", "--secret", secret,
                     "--bits", "400"]) == 0
    out = capsys.readouterr().out
    assert "ber_lossless=0.000000" in out and "ber_q95=" in out
