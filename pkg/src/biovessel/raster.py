"""Rasterization of vessel graphs and the image operators applied around it.

Masks are ``uint8`` arrays indexed ``[y, x]`` (2D) or ``[z, y, x]`` (3D), so
the C-order byte stream is x-fastest. A cell with integer index ``(x, y[, z])``
is sampled at that exact point. A cell is vessel when it lies strictly inside
some node disc or some edge capsule; a capsule's radius interpolates linearly
between its two endpoint radii along the segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParam, InvalidParams, OutOfBounds
from .graph import VesselGraph

VESSEL = 255


@dataclass(frozen=True)
class RasterMask:
    """Binary occupancy grid; ``dims`` is ``(width, height[, depth])``."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim not in (2, 3):
            raise ValueError("mask data must be 2D or 3D")

    @classmethod
    def zeros(cls, dims) -> "RasterMask":
        return cls(np.zeros(tuple(reversed(tuple(dims))), dtype=np.uint8))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(reversed(self.data.shape))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, RasterMask) and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True)
class StyleParams:
    noise_sigma: float = 8.0
    contrast_gamma: float = 1.0
    background_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InvalidParams("noise_sigma must be >= 0")
        if not self.contrast_gamma > 0:
            raise InvalidParams("contrast_gamma must be > 0")
        if not 0 <= self.background_level <= 255:
            raise InvalidParams("background_level must lie in [0, 255]")

    @property
    def vessel_level(self) -> float:
        # dark vessels on bright backgrounds keep the intensity gap >= 127.5
        return 255.0 if self.background_level <= 127.5 else 0.0


# -- rasterization ---------------------------------------------------------

def _normalize_dims(dims, ndim: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != ndim or any(d <= 0 for d in dims):
        raise InvalidParams(f"expected {ndim} positive dims, got {dims!r}")
    return dims


def _check_bounds(points: np.ndarray, dims: tuple[int, ...]) -> None:
    if not len(points):
        return
    hi = np.array(dims, dtype=np.float64)
    outside = ~((points >= 0) & (points < hi)).all(axis=1)
    if outside.any():
        i = int(np.flatnonzero(outside)[0])
        raise OutOfBounds(f"node {i} at {points[i].tolist()} lies outside canvas {dims}")


def fit_to_canvas(graph: VesselGraph, dims, margin: float = 2.0) -> VesselGraph:
    """Uniformly scale and translate ``graph`` (radii included) into ``dims``."""
    ndim = len(dims)
    pts = graph.coords[:, :ndim]
    if not len(pts):
        return graph
    r = graph.radii
    lo = (pts - r[:, None]).min(axis=0)
    hi = (pts + r[:, None]).max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    room = np.array(dims, dtype=np.float64) - 1 - 2 * margin
    scale = float(np.min(room / span))
    offset = margin + (room - span * scale) / 2.0
    coords = graph.coords.copy()
    coords[:, :ndim] = (pts - lo) * scale + offset
    return VesselGraph(coords, r * scale, graph.edges, meta=graph.meta)


def _segments(graph: VesselGraph, ndim: int):
    pts = graph.coords[:, :ndim]
    pairs = graph.undirected_edges()
    return pts, graph.radii, pairs


def _paint(grid: np.ndarray, a: np.ndarray, b: np.ndarray, ra: float, rb: float) -> None:
    """Mark cells strictly inside the tapered capsule ``a -> b`` (a disc when a == b)."""
    ndim = len(a)
    reach = max(ra, rb)
    lo = np.maximum(np.floor(np.minimum(a, b) - reach).astype(np.int64), 0)
    hi_limit = np.array(grid.shape[::-1]) - 1
    hi = np.minimum(np.ceil(np.maximum(a, b) + reach).astype(np.int64), hi_limit)
    if np.any(hi < lo):
        return
    axes = [np.arange(lo[d], hi[d] + 1, dtype=np.float64) for d in range(ndim)]
    mesh = np.meshgrid(*axes[::-1], indexing="ij")[::-1]  # x, y[, z] each shaped like the window
    ab = [float(b[d] - a[d]) for d in range(ndim)]
    len2 = sum(v * v for v in ab)
    rel = [mesh[d] - a[d] for d in range(ndim)]
    if len2 > 0.0:
        t = sum(rel[d] * ab[d] for d in range(ndim)) / len2
        t = np.clip(t, 0.0, 1.0)
    else:
        t = np.zeros_like(rel[0])
    dist2 = sum((rel[d] - t * ab[d]) ** 2 for d in range(ndim))
    radius = ra + t * (rb - ra)
    inside = dist2 < radius * radius
    window = tuple(slice(lo[d], hi[d] + 1) for d in reversed(range(ndim)))
    grid[window][inside] = VESSEL


def _rasterize(graph: VesselGraph, dims, ndim: int, fit: bool) -> RasterMask:
    dims = _normalize_dims(dims, ndim)
    if fit:
        graph = fit_to_canvas(graph, dims)
    grid = np.zeros(tuple(reversed(dims)), dtype=np.uint8)
    pts, radii, pairs = _segments(graph, ndim)
    _check_bounds(pts, dims)
    # capsules already contain their endpoint discs
    isolated = np.ones(len(pts), dtype=bool)
    isolated[pairs.ravel()] = False
    for i in np.flatnonzero(isolated).tolist():
        _paint(grid, pts[i], pts[i], radii[i], radii[i])
    for i, j in pairs.tolist():
        _paint(grid, pts[i], pts[j], radii[i], radii[j])
    return RasterMask(grid)


def rasterize_2d(graph: VesselGraph, dims, *, fit: bool = False) -> RasterMask:
    """Render the graph's ``(x, y)`` projection on a ``(width, height)`` canvas."""
    return _rasterize(graph, dims, 2, fit)


def rasterize_3d(graph: VesselGraph, dims, *, fit: bool = False) -> RasterMask:
    """Render the graph into a ``(width, height, depth)`` voxel volume."""
    return _rasterize(graph, dims, 3, fit)


def rasterize(graph: VesselGraph, dims, *, fit: bool = False) -> RasterMask:
    return rasterize_3d(graph, dims, fit=fit) if len(dims) == 3 else rasterize_2d(graph, dims, fit=fit)


# -- style surrogate ---------------------------------------------------------

def style_adapt(mask, params: StyleParams = StyleParams()) -> np.ndarray:
    """Render a mask as an OCTA-like grayscale image without moving any vessel.

    ``out = clamp(round(bg + (vessel - bg) * (m / 255) ** gamma + speckle))``.
    Speckle is Gaussian with ``noise_sigma`` but truncated strictly below half
    the vessel/background gap, so :func:`rebinarize` always recovers a binary
    input mask.
    """
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidParams("style_adapt expects a 2D mask")
    bg, fg = float(params.background_level), params.vessel_level
    base = bg + (fg - bg) * (m / 255.0) ** params.contrast_gamma
    if params.noise_sigma > 0:
        limit = max(abs(fg - bg) / 2.0 - 1.0, 0.0)
        rng = np.random.default_rng(params.seed)
        noise = np.clip(rng.normal(0.0, params.noise_sigma, m.shape), -limit, limit)
        base = base + noise
    return np.clip(np.rint(base), 0, 255).astype(np.uint8)


def rebinarize(image, params: StyleParams = StyleParams()) -> RasterMask:
    """Threshold a styled image at the midpoint between background and vessel levels."""
    img = np.asarray(image, dtype=np.float64)
    bg, fg = float(params.background_level), params.vessel_level
    mid = (bg + fg) / 2.0
    vessel = img > mid if fg > bg else img < mid
    return RasterMask(np.where(vessel, VESSEL, 0).astype(np.uint8))


# -- preprocessing -----------------------------------------------------------

def dark_channel(image, patch_size: int) -> np.ndarray:
    if patch_size < 1 or patch_size % 2 == 0:
        raise InvalidParam("patch_size must be an odd integer >= 1")
    return ndimage.minimum_filter(np.asarray(image, dtype=np.float64), size=patch_size, mode="nearest")


def estimate_atmosphere(image, dark: np.ndarray, top_fraction: float = 0.001) -> float:
    """Brightest input intensity among the haziest ``top_fraction`` of pixels."""
    img = np.asarray(image, dtype=np.float64)
    flat = dark.ravel()
    k = max(int(math.floor(flat.size * top_fraction)), 1)
    cutoff = np.partition(flat, flat.size - k)[flat.size - k]
    return float(img.ravel()[flat >= cutoff].max())


def dark_channel_dehaze(
    image,
    patch_size: int = 15,
    *,
    omega: float = 0.95,
    t0: float = 0.1,
    atmosphere: float | None = None,
) -> np.ndarray:
    """Grayscale dark-channel-prior dehazing.

    The transmission is ``t = 1 - omega * dark(I / A)`` and the scene is
    recovered as ``J = (I - A) / max(t, t0) + A``, clamped to ``[0, 255]``.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidParam("dark_channel_dehaze expects a 2D grayscale image")
    dark = dark_channel(img, patch_size)
    A = estimate_atmosphere(img, dark) if atmosphere is None else float(atmosphere)
    if A <= 0:
        return img.copy()
    t = 1.0 - omega * dark / A
    J = (img - A) / np.maximum(t, t0) + A
    return np.clip(J, 0.0, 255.0)


def unsharp_mask(image, sigma: float = 1.0, amount: float = 1.0) -> np.ndarray:
    """``clamp(image + amount * (image - gaussian_blur(image, sigma)))`` with reflected borders."""
    if not sigma > 0:
        raise InvalidParam("sigma must be positive")
    img = np.asarray(image, dtype=np.float64)
    blurred = ndimage.gaussian_filter(img, sigma, mode="reflect", truncate=4.0)
    return np.clip(img + amount * (img - blurred), 0.0, 255.0)
