"""Raster transforms on object images: grayscale, mask, mirror, dilate."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from relkit.records import ObjectImage

GRAY_FILL = (100, 100, 100)
BACKGROUND = (255, 255, 255)


def grayscale_pixels(pixels: np.ndarray) -> np.ndarray:
    """Per-pixel luminance L = round(0.299R + 0.587G + 0.114B), replicated.

    Integer arithmetic so the result is platform-exact and idempotent
    (gray inputs map to themselves: (299+587+114)v = 1000v).
    """
    p = pixels.astype(np.uint32)
    lum = (299 * p[..., 0] + 587 * p[..., 1] + 114 * p[..., 2] + 500) // 1000
    return np.repeat(lum.astype(np.uint8)[..., None], 3, axis=-1)


def masked_pixels(pixels: np.ndarray) -> np.ndarray:
    """Flatten every non-background pixel to (100,100,100).

    Covers both halves of the rule: pixels with all channels <= 250, and
    pixels with any channel > 250 that are not exactly (255,255,255) — e.g.
    (252,255,255) becomes gray.  Exact background stays untouched.
    """
    is_bg = np.all(pixels == 255, axis=-1)
    out = np.empty_like(pixels)
    out[...] = GRAY_FILL
    out[is_bg] = 255
    return out


def mirror_pixels(pixels: np.ndarray) -> np.ndarray:
    """Reflect about the vertical axis (left-right flip)."""
    return pixels[:, ::-1].copy()


def to_grayscale(obj: ObjectImage) -> ObjectImage:
    return ObjectImage(obj.object_id, grayscale_pixels(obj.pixels), obj.source, obj.factors)


def to_masked(obj: ObjectImage) -> ObjectImage:
    return ObjectImage(obj.object_id, masked_pixels(obj.pixels), obj.source, obj.factors)


def mirror(obj: ObjectImage) -> ObjectImage:
    return ObjectImage(obj.object_id, mirror_pixels(obj.pixels), obj.source, obj.factors)


def dilate_mask(mask: np.ndarray, width: int) -> np.ndarray:
    """Dilate a boolean mask with a 3x3 square element floor((width-1)/2) times."""
    if width < 1:
        raise ValueError("width must be >= 1")
    iters = (width - 1) // 2
    if iters == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool), iterations=iters)


def dilate(obj: ObjectImage, width: int) -> ObjectImage:
    """Thicken a binary (background + one stroke color) object image."""
    fg = np.any(obj.pixels != 255, axis=-1)
    colors = obj.pixels[fg]
    if colors.size and not np.all(colors == colors[0]):
        raise ValueError("dilate requires a binary image: one stroke color on white")
    stroke = tuple(colors[0]) if colors.size else (0, 0, 0)
    out = np.full_like(obj.pixels, 255)
    out[dilate_mask(fg, width)] = stroke
    return ObjectImage(obj.object_id, out, obj.source, obj.factors)
