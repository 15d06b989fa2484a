"""Deterministic PNG encode/decode for 8-bit RGB images.

Encoding is done by hand (fixed zlib level, filter 0 on every scanline) so
that identical pixel arrays always produce identical files; decoding goes
through Pillow's C path for speed.
"""

from __future__ import annotations

import io
import struct
import zlib

import numpy as np
from PIL import Image

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload))
    )


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an HxWx3 uint8 array as an 8-bit RGB PNG (no alpha)."""
    if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"expected HxWx3 uint8, got {pixels.dtype} {pixels.shape}")
    h, w = pixels.shape[:2]
    # one filter byte (0 = None) per scanline
    raw = np.empty((h, 1 + w * 3), np.uint8)
    raw[:, 0] = 0
    raw[:, 1:] = pixels.reshape(h, w * 3)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    idat = zlib.compress(raw.tobytes(), _ZLIB_LEVEL)
    return _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to an HxWx3 uint8 array."""
    with Image.open(io.BytesIO(data)) as im:
        return np.array(im.convert("RGB"))  # copy: callers get a writable array


def write_png(path, pixels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(encode_png(pixels))


def read_png(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_png(f.read())
