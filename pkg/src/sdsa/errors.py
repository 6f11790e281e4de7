"""Exception types shared across the toolkit."""


class StegoError(Exception):
    """Base class for all toolkit errors."""


class OffsetsTooLarge(StegoError):
    """Crop offsets leave no usable inner image."""


class GeometryMismatch(StegoError):
    """Border record and inner image do not describe the same original."""


class BlockTooLarge(StegoError):
    """Not even one full block fits in the image."""


class UnsupportedFormat(StegoError):
    """Image file format or pixel mode outside the supported set."""


class IoFailure(StegoError):
    """File could not be read or written."""


class BadKeyLength(StegoError):
    """AES key is not 16, 24 or 32 bytes."""


class BadPadding(StegoError):
    """Block padding check failed on decrypt (wrong key or corrupt data)."""


class PayloadExceedsCapacity(StegoError):
    """Payload needs more bits than the cover can carry."""


class NotEnoughBlocks(StegoError):
    """Selection asked for more blocks than the grid provides."""


class DimensionMismatch(StegoError):
    """Array shapes disagree where they must match."""


class ImageTooSmall(StegoError):
    """Image below the minimum size for this operation."""


class BadMagic(StegoError):
    """Extracted bits do not start with a payload frame."""


class BadCrc(StegoError):
    """Frame checksum failed (corrupted ciphertext)."""


class SecretFileError(StegoError):
    """Shared-secret file is malformed."""
