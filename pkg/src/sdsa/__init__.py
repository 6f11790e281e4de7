"""AES-encrypted image steganography with a spatially desynchronized DCT grid."""

from .bitstream import BitStream
from .desync import (
    BlockSelection,
    SCHEME_LSB_REPLACE,
    SCHEME_PLUS_MINUS,
    StegoImage,
    StegoParams,
    capacity,
    nonzero_coefficients,
    sdsa_embed,
    sdsa_extract,
    select_blocks,
)
from .imgmodel import (
    ColorImage,
    CropOffsets,
    GrayImage,
    crop,
    load_image,
    partition,
    rgb_to_ycbcr,
    save_jpeg,
    save_lossless,
    stitch,
    ycbcr_to_rgb,
)

__version__ = "0.1.0"

__all__ = [
    "BitStream",
    "BlockSelection",
    "ColorImage",
    "CropOffsets",
    "GrayImage",
    "SCHEME_LSB_REPLACE",
    "SCHEME_PLUS_MINUS",
    "StegoImage",
    "StegoParams",
    "capacity",
    "crop",
    "load_image",
    "nonzero_coefficients",
    "partition",
    "rgb_to_ycbcr",
    "save_jpeg",
    "save_lossless",
    "sdsa_embed",
    "sdsa_extract",
    "select_blocks",
    "stitch",
    "ycbcr_to_rgb",
    "__version__",
]
