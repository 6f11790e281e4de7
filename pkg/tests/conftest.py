import pathlib

import numpy as np
import pytest

from sdsa.imgmodel import GrayImage, load_image

CORPUS_DIR = pathlib.Path(__file__).parent / "fixtures" / "corpus"
CORPUS_NAMES = ("camera", "moon", "astronaut", "brick", "grass")


@pytest.fixture(scope="session")
def corpus() -> dict[str, GrayImage]:
    """Five photographic 512x512 grayscale covers."""
    out = {}
    for name in CORPUS_NAMES:
        img = load_image(CORPUS_DIR / f"{name}.png")
        assert isinstance(img, GrayImage) and img.width >= 512 and img.height >= 512
        out[name] = img
    return out


@pytest.fixture(scope="session")
def camera(corpus) -> GrayImage:
    return corpus["camera"]


def textured_gray(height: int, width: int, seed: int = 0) -> GrayImage:
    """Synthetic photograph-like cover: smooth ramps plus moderate noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    base = 128 + 55 * np.sin(yy / 31.0) + 45 * np.cos(xx / 17.0)
    img = base + rng.normal(0, 12, (height, width))
    return GrayImage(np.clip(img, 0, 255).astype(np.uint8))
