"""World/pixel mapping and rendering of bearing scenarios into images.

Images follow the north-up convention: row 0 is the maximum-y edge, columns
grow with x. The input image is platform discs plus one DF ray per bearing,
binary strokes composed with saturating max, so values are exactly {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRegionError
from .geometry import DEFAULT_REGION, Region, WorldPoint
from .kernels import stamp_disc, stamp_ray
from .scenario import Scenario, SourceSet

ROW_ORDER = "north-up"

DEFAULT_RESOLUTION = 250.0
DEFAULT_MARKER_RADIUS = 3


@dataclass(frozen=True)
class GridSpec:
    """Raster geometry. Width/height must divide the region exactly so the
    mapping is invertible without edge slivers."""

    region: Region
    resolution: float
    width: int
    height: int
    row_order: str = ROW_ORDER

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if self.row_order != ROW_ORDER:
            raise ValueError(f"unsupported row order {self.row_order!r}")
        if self.width * self.resolution != self.region.width:
            raise ValueError(
                f"width {self.width} x {self.resolution} m does not tile "
                f"[{self.region.x_min}, {self.region.x_max}] exactly"
            )
        if self.height * self.resolution != self.region.height:
            raise ValueError(
                f"height {self.height} x {self.resolution} m does not tile "
                f"[{self.region.y_min}, {self.region.y_max}] exactly"
            )

    @classmethod
    def from_region(cls, region: Region, resolution: float = DEFAULT_RESOLUTION) -> "GridSpec":
        if resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {resolution}")
        width = region.width / resolution
        height = region.height / resolution
        if width != int(width) or height != int(height):
            raise ValueError(
                f"resolution {resolution} does not divide the region "
                f"{region.width} x {region.height} exactly"
            )
        return cls(region=region, resolution=resolution, width=int(width), height=int(height))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


DEFAULT_GRID = GridSpec.from_region(DEFAULT_REGION, DEFAULT_RESOLUTION)


@dataclass(frozen=True)
class PixelCoord:
    """row/col indices; integral for image addressing, fractional for
    centroids and sub-pixel ray origins."""

    row: float
    col: float

    def __post_init__(self):
        if not (math.isfinite(self.row) and math.isfinite(self.col)):
            raise ValueError(f"non-finite pixel coordinate ({self.row}, {self.col})")


@dataclass(frozen=True)
class InputImage:
    intensities: np.ndarray  # (H, W) float64 in [0, 1]
    grid: GridSpec

    def __post_init__(self):
        if self.intensities.shape != self.grid.shape:
            raise ValueError("image shape disagrees with grid")
        lo, hi = float(self.intensities.min(initial=0.0)), float(self.intensities.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"intensities outside [0, 1]: min {lo}, max {hi}")


@dataclass(frozen=True)
class LabelImage:
    mask: np.ndarray  # (H, W) uint8 in {0, 1}
    grid: GridSpec

    def __post_init__(self):
        if self.mask.shape != self.grid.shape:
            raise ValueError("mask shape disagrees with grid")
        if self.mask.dtype != np.uint8 or not np.isin(self.mask, (0, 1)).all():
            raise ValueError("mask must be uint8 in {0, 1}")


def world_to_pixel(p: WorldPoint, g: GridSpec) -> PixelCoord:
    """Containing cell of p; the closed x_max / y_min boundary clamps
    into the last row/column."""
    if not g.region.contains(p.x, p.y):
        raise OutOfRegionError(f"({p.x}, {p.y}) outside {g.region}")
    col = int(math.floor((p.x - g.region.x_min) / g.resolution))
    row = int(math.floor((g.region.y_max - p.y) / g.resolution))
    return PixelCoord(row=min(row, g.height - 1), col=min(col, g.width - 1))


def pixel_to_world(pc: PixelCoord, g: GridSpec) -> WorldPoint:
    """Cell-center of pc (fractional coordinates interpolate linearly)."""
    if not (-0.5 <= pc.row <= g.height - 0.5 and -0.5 <= pc.col <= g.width - 0.5):
        raise OutOfRegionError(f"pixel ({pc.row}, {pc.col}) outside {g.width}x{g.height} image")
    return WorldPoint(
        x=g.region.x_min + (pc.col + 0.5) * g.resolution,
        y=g.region.y_max - (pc.row + 0.5) * g.resolution,
    )


def fractional_pixel(p: WorldPoint, g: GridSpec) -> PixelCoord:
    """Exact (sub-pixel) position of p, the inverse of pixel_to_world."""
    if not g.region.contains(p.x, p.y):
        raise OutOfRegionError(f"({p.x}, {p.y}) outside {g.region}")
    return PixelCoord(
        row=(g.region.y_max - p.y) / g.resolution - 0.5,
        col=(p.x - g.region.x_min) / g.resolution - 0.5,
    )


def draw_df_ray(
    img: InputImage,
    origin: PixelCoord,
    theta: float,
    antialias: bool = False,
) -> None:
    """Stamp a half-line from origin toward theta (world convention:
    0 = east = +col, pi/2 = north = -row) out to the image edge.

    Default strokes are binary with saturating max. The anti-aliased
    variant splits each step across the two nearest minor-axis pixels.
    """
    drow = -math.sin(theta)
    dcol = math.cos(theta)
    if not antialias:
        stamp_ray(img.intensities, float(origin.row), float(origin.col), drow, dcol)
        return
    _stamp_ray_aa(img.intensities, float(origin.row), float(origin.col), drow, dcol)


def _stamp_ray_aa(values: np.ndarray, row_f: float, col_f: float, drow: float, dcol: float) -> None:
    """Two-pixel coverage weighting along the minor axis, composed with max."""
    h, w = values.shape
    if abs(dcol) >= abs(drow):
        maj_f, min_f, dmaj, dmin, maj_len = col_f, row_f, dcol, drow, w
        put = lambda mn, mj, v: _max_at(values, mn, mj, v, h, w)
    else:
        maj_f, min_f, dmaj, dmin, maj_len = row_f, col_f, drow, dcol, h
        put = lambda mj, mn, v: _max_at(values, mj, mn, v, h, w)
    if dmaj == 0.0:
        return
    slope = dmin / dmaj
    step = 1 if dmaj > 0 else -1
    k = int(math.floor(maj_f + 0.5))
    if (k < 0 and step < 0) or (k > maj_len - 1 and step > 0):
        return  # off-canvas start pointing further away
    k = max(0, min(k, maj_len - 1))
    while 0 <= k < maj_len:
        mn = min_f + slope * (k - maj_f)
        base = math.floor(mn)
        frac = mn - base
        put(int(base), k, 1.0 - frac)
        put(int(base) + 1, k, frac)
        k += step


def _max_at(values: np.ndarray, r: int, c: int, v: float, h: int, w: int) -> None:
    if 0 <= r < h and 0 <= c < w and v > values[r, c]:
        values[r, c] = v


def draw_platform_marker(img: InputImage, center: PixelCoord, radius_px: int = DEFAULT_MARKER_RADIUS) -> None:
    """Filled disc (dr^2 + dc^2 <= radius^2) at intensity 1, clipped."""
    if radius_px < 0:
        raise ValueError(f"radius must be >= 0, got {radius_px}")
    stamp_disc(img.intensities, int(center.row), int(center.col), int(radius_px))


def render_input(
    s: Scenario,
    g: GridSpec | None = None,
    marker_radius_px: int = DEFAULT_MARKER_RADIUS,
    antialias: bool = False,
) -> InputImage:
    """Platform discs plus one DF ray per bearing, rays cast from the exact
    (fractional) platform positions at the measured bearings."""
    if g is None:
        g = GridSpec.from_region(s.config.region, DEFAULT_RESOLUTION)
    img = InputImage(intensities=np.zeros(g.shape), grid=g)
    for x, y in s.trajectory.positions:
        draw_platform_marker(img, world_to_pixel(WorldPoint(float(x), float(y)), g), marker_radius_px)
    m = s.measurements
    for i in range(len(m)):
        origin = fractional_pixel(WorldPoint(float(m.platform_xy[i, 0]), float(m.platform_xy[i, 1])), g)
        draw_df_ray(img, origin, float(m.theta_meas[i]), antialias=antialias)
    return img


def render_label(sources: SourceSet, g: GridSpec, dot_radius_px: int = 0) -> LabelImage:
    """Single-pixel source dots by default; a positive radius stamps discs
    (sources closer than a cell collapse onto the same pixel)."""
    if dot_radius_px < 0:
        raise ValueError(f"dot radius must be >= 0, got {dot_radius_px}")
    mask = np.zeros(g.shape, dtype=np.float64)
    for x, y in sources.xy:
        pc = world_to_pixel(WorldPoint(float(x), float(y)), g)
        if dot_radius_px == 0:
            mask[int(pc.row), int(pc.col)] = 1.0
        else:
            stamp_disc(mask, int(pc.row), int(pc.col), dot_radius_px)
    return LabelImage(mask=mask.astype(np.uint8), grid=g)
