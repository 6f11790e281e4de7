#!/usr/bin/env python3
"""Regenerate the grayscale test corpus from scikit-image sample photographs.

The five 512x512 PNGs under tests/fixtures/corpus/ are committed; run this
only if they need rebuilding. Requires scikit-image (not a package dependency).
"""

import pathlib

import numpy as np
from PIL import Image
import skimage.data as skd

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    covers = {
        "camera": skd.camera(),
        "moon": skd.moon(),
        "astronaut": np.asarray(Image.fromarray(skd.astronaut()).convert("L")),
        "brick": skd.brick(),
        "grass": skd.grass(),
    }
    for name, px in covers.items():
        assert px.shape == (512, 512) and px.dtype == np.uint8, (name, px.shape)
        path = OUT / f"{name}.png"
        Image.fromarray(px, "L").save(path, format="PNG")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
