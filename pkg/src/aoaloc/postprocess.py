"""Probability map -> binary mask -> connected components -> world estimates.

The decode chain for segmentation outputs, also used to read ground-truth
label images back into source positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import Method, SourceEstimate
from .geometry import WorldPoint
from .kernels import label_components
from .raster import GridSpec, PixelCoord, pixel_to_world


@dataclass(frozen=True)
class ProbabilityMap:
    values: np.ndarray  # (H, W) in [0, 1]
    grid: GridSpec

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError("map shape disagrees with grid")
        lo = float(self.values.min(initial=0.0))
        hi = float(self.values.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"probabilities outside [0, 1]: min {lo}, max {hi}")


@dataclass(frozen=True)
class Component:
    pixels: np.ndarray  # (A, 2) int rows/cols
    area: int
    centroid: PixelCoord

    def __post_init__(self):
        if self.area != self.pixels.shape[0] or self.area < 1:
            raise ValueError("area must equal the pixel count and be >= 1")


@dataclass(frozen=True)
class ComponentSet:
    components: list[Component]
    shape: tuple[int, int]

    def __len__(self) -> int:
        return len(self.components)


def binarize(p: ProbabilityMap, threshold: float = 0.5) -> np.ndarray:
    """mask = values >= threshold (boundary value is foreground)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return (p.values >= threshold).astype(np.uint8)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> ComponentSet:
    """Maximal connected foreground sets, labeled in raster-scan order of
    their first pixel."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    labels, count = label_components(mask, connectivity)
    flat = labels.ravel()
    fg = np.flatnonzero(flat)
    order = fg[np.argsort(flat[fg], kind="stable")]
    rows, cols = np.divmod(order, mask.shape[1])
    bounds = np.searchsorted(flat[order], np.arange(1, count + 2))
    components = []
    start = 0
    for stop in bounds:
        if stop == start:
            continue
        px = np.column_stack([rows[start:stop], cols[start:stop]])
        centroid = PixelCoord(row=float(px[:, 0].mean()), col=float(px[:, 1].mean()))
        components.append(Component(pixels=px, area=int(stop - start), centroid=centroid))
        start = stop
    return ComponentSet(components=components, shape=mask.shape)


def components_to_estimates(
    cs: ComponentSet,
    g: GridSpec,
    min_area: int = 1,
    weights: np.ndarray | None = None,
) -> list[SourceEstimate]:
    """World-coordinate estimate per component of area >= min_area.

    Centroids are unweighted pixel means; passing the probability map as
    `weights` switches to intensity-weighted centroids.
    """
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    estimates = []
    for comp in cs.components:
        if comp.area < min_area:
            continue
        if weights is None:
            centroid = comp.centroid
        else:
            w = weights[comp.pixels[:, 0], comp.pixels[:, 1]].astype(np.float64)
            total = float(w.sum())
            if total <= 0.0:
                centroid = comp.centroid
            else:
                centroid = PixelCoord(
                    row=float((comp.pixels[:, 0] * w).sum() / total),
                    col=float((comp.pixels[:, 1] * w).sum() / total),
                )
        estimates.append(
            SourceEstimate(
                position=pixel_to_world(centroid, g),
                method=Method.SEGNET,
                diagnostics={
                    "area": comp.area,
                    "centroid_row": centroid.row,
                    "centroid_col": centroid.col,
                },
            )
        )
    return estimates


def decode_probability_map(
    p: ProbabilityMap,
    threshold: float = 0.5,
    min_area: int = 1,
    connectivity: int = 8,
    weighted_centroids: bool = False,
) -> list[SourceEstimate]:
    """Full decode chain; S-hat is the length of the returned list."""
    mask = binarize(p, threshold)
    cs = connected_components(mask, connectivity)
    weights = p.values if weighted_centroids else None
    return components_to_estimates(cs, p.grid, min_area=min_area, weights=weights)
