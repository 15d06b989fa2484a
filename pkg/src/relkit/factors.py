"""Factorized objects: shape masks x tileable textures x a fixed palette.

The catalog is procedural and fixed (16 shapes, 16 textures, 16 colors), so
a factor triple is a complete description of an object: equal triples give
pixel-identical rasters and any differing factor changes at least one pixel.
The palette keeps channel values on the grid {30, 80, 150, 220}; with
texture intensities floored at 0.25, distinct colors stay distinct after
rounding at every textured pixel (min channel gap 50 * 0.25 > 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relkit.records import OBJECT_SIZE, Factors, ObjectImage
from relkit.seeds import mix64

_N = OBJECT_SIZE
_C = (_N - 1) / 2.0
_YY, _XX = np.mgrid[0:_N, 0:_N]
_DX = _XX - _C
_DY = _YY - _C
_R = np.hypot(_DX, _DY)

# texture intensity floor; see module docstring for why 0.25
_T_LO = 0.25


def _polygon_mask(vertices: np.ndarray) -> np.ndarray:
    """Even-odd fill of a polygon over the pixel grid (crossing number)."""
    x, y = _XX + 0.5, _YY + 0.5  # sample at pixel centers, offset breaks ties
    inside = np.zeros((_N, _N), bool)
    n = len(vertices)
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        if y0 == y1:
            continue
        cond = (y0 <= y) != (y1 <= y)
        t = (y - y0) / (y1 - y0)
        crosses = cond & (x < x0 + t * (x1 - x0))
        inside ^= crosses
    return inside


def _regular_polygon(sides: int, radius: float, phase: float = -np.pi / 2) -> np.ndarray:
    ang = phase + 2 * np.pi * np.arange(sides) / sides
    return np.stack([_C + radius * np.cos(ang), _C + radius * np.sin(ang)], axis=1)


def _star(points: int, r_out: float, r_in: float) -> np.ndarray:
    ang = -np.pi / 2 + np.pi * np.arange(2 * points) / points
    rad = np.where(np.arange(2 * points) % 2 == 0, r_out, r_in)
    return np.stack([_C + rad * np.cos(ang), _C + rad * np.sin(ang)], axis=1)


def _build_shapes() -> dict[str, np.ndarray]:
    shapes: dict[str, np.ndarray] = {}
    shapes["shape-circle"] = _R <= 24
    shapes["shape-square"] = np.maximum(np.abs(_DX), np.abs(_DY)) <= 21
    shapes["shape-diamond"] = np.abs(_DX) + np.abs(_DY) <= 27
    shapes["shape-triangle"] = _polygon_mask(_regular_polygon(3, 26))
    shapes["shape-pentagon"] = _polygon_mask(_regular_polygon(5, 25))
    shapes["shape-hexagon"] = _polygon_mask(_regular_polygon(6, 24))
    shapes["shape-octagon"] = _polygon_mask(_regular_polygon(8, 24))
    shapes["shape-star4"] = _polygon_mask(_star(4, 27, 11))
    shapes["shape-star5"] = _polygon_mask(_star(5, 27, 12))
    shapes["shape-star6"] = _polygon_mask(_star(6, 27, 14))
    shapes["shape-star8"] = _polygon_mask(_star(8, 27, 16))
    shapes["shape-cross"] = (
        (np.abs(_DX) <= 9) | (np.abs(_DY) <= 9)
    ) & (np.maximum(np.abs(_DX), np.abs(_DY)) <= 25)
    shapes["shape-ring"] = (_R <= 25) & (_R >= 13)
    shapes["shape-halfdisc"] = (_R <= 26) & (_DY >= -3)
    shapes["shape-ellipse"] = (_DX / 27) ** 2 + (_DY / 16) ** 2 <= 1
    shapes["shape-crescent"] = (_R <= 25) & (np.hypot(_DX - 12, _DY) > 17)
    return shapes


def _hash_noise() -> np.ndarray:
    # deterministic per-pixel pseudo-noise from the pixel index hash
    idx = (_YY * _N + _XX).astype(np.uint64)
    vals = np.array([mix64(int(v) + 0x517CC1B727220A95) for v in idx.ravel()])
    return (vals % 1000).reshape(_N, _N) / 999.0


def _build_textures() -> dict[str, np.ndarray]:
    t: dict[str, np.ndarray] = {}
    t["tex-solid"] = np.ones((_N, _N))
    t["tex-stripes-h"] = ((_YY // 4) % 2).astype(float)
    t["tex-stripes-v"] = ((_XX // 4) % 2).astype(float)
    t["tex-stripes-diag"] = (((_XX + _YY) // 4) % 2).astype(float)
    t["tex-stripes-anti"] = (((_XX - _YY) // 4) % 2).astype(float)
    t["tex-checks-8"] = (((_XX // 8) + (_YY // 8)) % 2).astype(float)
    t["tex-checks-4"] = (((_XX // 4) + (_YY // 4)) % 2).astype(float)
    t["tex-dots"] = (np.hypot((_XX % 8) - 3.5, (_YY % 8) - 3.5) <= 2.5).astype(float)
    t["tex-rings"] = ((_R.astype(int) // 4) % 2).astype(float)
    t["tex-waves"] = 0.5 + 0.5 * np.sin(2 * np.pi * _XX / 8 + 2.0 * np.sin(2 * np.pi * _YY / 16))
    t["tex-zigzag"] = ((np.abs((_XX % 16) - 8) + _YY) // 4 % 2).astype(float)
    t["tex-gridlines"] = (((_XX % 8) < 2) | ((_YY % 8) < 2)).astype(float)
    t["tex-gradient-h"] = _XX / (_N - 1.0)
    t["tex-gradient-v"] = _YY / (_N - 1.0)
    t["tex-noise"] = _hash_noise()
    t["tex-diamondgrid"] = (((np.abs(_DX) + np.abs(_DY)).astype(int) // 4) % 2).astype(float)
    return t


_PALETTE: dict[str, tuple[int, int, int]] = {
    "color-red": (220, 30, 30),
    "color-green": (30, 220, 30),
    "color-blue": (30, 30, 220),
    "color-yellow": (220, 220, 30),
    "color-magenta": (220, 30, 220),
    "color-cyan": (30, 220, 220),
    "color-orange": (220, 150, 30),
    "color-purple": (150, 30, 220),
    "color-pink": (220, 150, 150),
    "color-teal": (30, 150, 150),
    "color-olive": (150, 150, 30),
    "color-navy": (30, 30, 150),
    "color-maroon": (150, 30, 30),
    "color-forest": (30, 150, 30),
    "color-slate": (80, 80, 150),
    "color-gray": (150, 150, 150),
}


@dataclass
class FactorCatalog:
    shapes: dict[str, np.ndarray]
    textures: dict[str, np.ndarray]
    colors: dict[str, tuple[int, int, int]]

    def __post_init__(self) -> None:
        for group in (self.shapes, self.textures, self.colors):
            if len(set(group)) != len(group):
                raise ValueError("factor ids must be unique")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.shapes), len(self.textures), len(self.colors))


_DEFAULT: FactorCatalog | None = None


def default_catalog() -> FactorCatalog:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = FactorCatalog(_build_shapes(), _build_textures(), dict(_PALETTE))
    return _DEFAULT


def gen_factorized(
    shape_id: str,
    texture_id: str,
    color_id: str,
    catalog: FactorCatalog,
    object_id: str | None = None,
) -> ObjectImage:
    """Texture tiled and tinted by color, clipped to the shape mask, on white."""
    try:
        mask = catalog.shapes[shape_id]
        tex = catalog.textures[texture_id]
        color = catalog.colors[color_id]
    except KeyError as e:
        raise KeyError(f"unknown factor id {e.args[0]!r}") from None
    intensity = _T_LO + (1.0 - _T_LO) * tex
    tinted = np.rint(intensity[..., None] * np.asarray(color, float)).astype(np.uint8)
    pixels = np.full((_N, _N, 3), 255, np.uint8)
    pixels[mask] = tinted[mask]
    if object_id is None:
        object_id = f"{shape_id}+{texture_id}+{color_id}"
    return ObjectImage(
        object_id, pixels, "factorized", Factors(shape_id, texture_id, color_id)
    )
