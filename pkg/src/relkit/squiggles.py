"""Procedural closed-contour squiggles.

A candidate curve samples control points at sorted random angles with random
radii around the frame center, closes them with a periodic cardinal
(Catmull-Rom family) spline, and is rasterized at one pixel.  Candidates
that self-intersect or leave the frame are rejected and redrawn; the
accepted contour is thickened by morphological dilation to the requested
stroke width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relkit.records import OBJECT_SIZE, ObjectImage
from relkit.seeds import SeedStream
from relkit.transforms import dilate_mask

MAX_ATTEMPTS = 100
_SAMPLES_PER_SEGMENT = 48
_CENTER = (OBJECT_SIZE - 1) / 2.0


@dataclass(frozen=True)
class SquiggleSpec:
    control_point_count: int = 10
    radius_range: tuple[float, float] = (12.0, 28.0)
    smoothing: float = 0.0  # cardinal-spline tension; 0 gives Catmull-Rom
    stroke_width: int = 3

    def __post_init__(self) -> None:
        if self.control_point_count < 4:
            raise ValueError("control_point_count must be >= 4")
        lo, hi = self.radius_range
        if not (0 < lo <= hi <= 30):
            raise ValueError("radius_range must satisfy 0 < min <= max <= 30")
        if self.stroke_width < 1:
            raise ValueError("stroke_width must be >= 1")


def _control_points(spec: SquiggleSpec, stream: SeedStream) -> np.ndarray:
    k = spec.control_point_count
    angles = np.sort(stream.uniform_array(k)) * 2 * np.pi
    lo, hi = spec.radius_range
    radii = lo + stream.uniform_array(k) * (hi - lo)
    return np.stack(
        [_CENTER + radii * np.cos(angles), _CENTER + radii * np.sin(angles)], axis=1
    )


def _closed_spline(points: np.ndarray, tension: float) -> np.ndarray:
    """Sample the periodic cardinal spline through `points` (N x 2 polyline)."""
    p0 = points
    p_prev = np.roll(points, 1, axis=0)
    p_next = np.roll(points, -1, axis=0)
    m = (1.0 - tension) * 0.5 * (p_next - p_prev)
    m_next = np.roll(m, -1, axis=0)
    t = np.linspace(0.0, 1.0, _SAMPLES_PER_SEGMENT, endpoint=False)
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    # (k, samples, 2) -> flatten in segment order
    seg = (
        h00[None, :, None] * p0[:, None, :]
        + h10[None, :, None] * m[:, None, :]
        + h01[None, :, None] * p_next[:, None, :]
        + h11[None, :, None] * m_next[:, None, :]
    )
    return seg.reshape(-1, 2)


def polyline_is_simple(poly: np.ndarray) -> bool:
    """True when no two non-adjacent closed-polyline segments properly cross."""
    n = len(poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))  # wrap-around neighbors share a point
    i, j = i[keep], j[keep]
    ax, ay = a[i, 0], a[i, 1]
    bx, by = b[i, 0], b[i, 1]
    cx, cy = a[j, 0], a[j, 1]
    dx, dy = b[j, 0], b[j, 1]
    d1 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
    d2 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
    d3 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    d4 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
    crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
    return not bool(crossing.any())


def _bresenham(mask: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        mask[y0, x0] = True
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_closed(poly: np.ndarray) -> np.ndarray:
    """1-px rasterization of a closed polyline onto a 64x64 boolean grid."""
    mask = np.zeros((OBJECT_SIZE, OBJECT_SIZE), bool)
    pts = np.rint(poly).astype(int)
    for idx in range(len(pts)):
        x0, y0 = pts[idx]
        x1, y1 = pts[(idx + 1) % len(pts)]
        _bresenham(mask, x0, y0, x1, y1)
    return mask


def squiggle_curve(spec: SquiggleSpec, stream: SeedStream) -> np.ndarray:
    """Draw candidates until one is simple and in-frame; return its polyline."""
    margin = (spec.stroke_width - 1) // 2
    for _ in range(MAX_ATTEMPTS):
        poly = _closed_spline(_control_points(spec, stream), spec.smoothing)
        r = np.rint(poly)
        if r.min() < margin or r.max() > OBJECT_SIZE - 1 - margin:
            continue
        if polyline_is_simple(poly):
            return poly
    raise RuntimeError(
        f"no simple in-frame squiggle in {MAX_ATTEMPTS} attempts; spec {spec}"
    )


def gen_squiggle(
    spec: SquiggleSpec, stream: SeedStream, object_id: str = "squiggle"
) -> ObjectImage:
    poly = squiggle_curve(spec, stream)
    contour = rasterize_closed(poly)
    body = dilate_mask(contour, spec.stroke_width)
    pixels = np.full((OBJECT_SIZE, OBJECT_SIZE, 3), 255, np.uint8)
    pixels[body] = 0  # pure black stroke
    return ObjectImage(object_id, pixels, "squiggle")
