"""Silhouette feature extraction: contrast stretch, thresholding, boundary
tracing, and the two contour-to-series conversions.

The full pipeline (see extract) turns a grayscale scan into a fixed-length
series: adjust -> binarize -> trace_boundary -> angle or centroid series
-> resample. Both conversions are exactly translation invariant since they
depend only on pixel offsets within the traced region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateRegionError, DegenerateTangentError, EmptyImageError
from .series import DEFAULT_SERIES_LEN, TimeSeries, resample

__all__ = [
    "GrayImage",
    "BinaryImage",
    "Contour",
    "adjust",
    "binarize",
    "invert",
    "trace_boundary",
    "angle_series",
    "centroid_series",
    "extract",
    "boundary_pixels",
]

DEFAULT_THRESHOLD = 0.5
DEFAULT_TANGENT_OFFSET = 10
DEFAULT_LOW_PCT = 1.0
DEFAULT_HIGH_PCT = 99.0

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)

# 8-neighborhood in clockwise order on screen (y grows downward)
_DIRS = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))
_WEST = 6


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major grid of intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must be finite and within [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Row-major grid of {0, 1} bits; 1 is foreground."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("bits must be exactly 0 or 1")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed clockwise boundary as (x, y) pixel coordinates.

    The first point is the top-left-most boundary pixel in row-major scan
    order; consecutive points (including last back to first) are
    8-neighbors. Pixels may repeat where the region is one pixel wide.
    """

    points: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected an (L, 2) point array, got shape {arr.shape}")
        if arr.shape[0] < 4:
            raise ValueError(f"contour needs at least 4 points, got {arr.shape[0]}")
        steps = np.roll(arr, -1, axis=0) - arr
        cheb = np.abs(steps).max(axis=1)
        if not np.all(cheb == 1):
            bad = int(np.argmax(cheb != 1))
            raise ValueError(f"points {bad} and {bad + 1} are not distinct 8-neighbors")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)

    def __len__(self) -> int:
        return self.points.shape[0]


def adjust(img: GrayImage, low_pct: float = DEFAULT_LOW_PCT, high_pct: float = DEFAULT_HIGH_PCT) -> GrayImage:
    """Percentile-based linear contrast stretch onto [0, 1].

    The low_pct percentile maps to 0 and the high_pct percentile to 1,
    clamping outside. Degenerate (constant) images map to all zeros.
    """
    if not 0.0 <= low_pct < high_pct <= 100.0:
        raise ValueError(f"need 0 <= low < high <= 100, got ({low_pct}, {high_pct})")
    lo = np.percentile(img.pixels, low_pct)
    hi = np.percentile(img.pixels, high_pct)
    if hi - lo < 1e-12:
        return GrayImage(np.zeros_like(img.pixels))
    return GrayImage(np.clip((img.pixels - lo) / (hi - lo), 0.0, 1.0))


def binarize(img: GrayImage, t: float = DEFAULT_THRESHOLD) -> BinaryImage:
    """Bit is 1 where intensity >= t (inclusive), else 0."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    return BinaryImage((img.pixels >= t).astype(np.uint8))


def invert(img: BinaryImage) -> BinaryImage:
    """Swap foreground and background (dark-object-on-light scans)."""
    return BinaryImage(1 - img.bits)


def _first_foreground(bits: np.ndarray) -> tuple[int, int]:
    flat = np.flatnonzero(bits)
    if flat.size == 0:
        raise EmptyImageError("no foreground pixel in image")
    y, x = divmod(int(flat[0]), bits.shape[1])
    return y, x


def _component_mask(bits: np.ndarray, seed_yx: tuple[int, int]) -> np.ndarray:
    labels, _ = ndimage.label(bits, structure=_FOUR_CONNECTED)
    return labels == labels[seed_yx]


def trace_boundary(img: BinaryImage) -> Contour:
    """Clockwise Moore-neighbor boundary of the first foreground region.

    The region is the 4-connected component of the first foreground pixel
    in row-major order; other blobs are ignored. Tracing stops when the
    start pixel is re-entered from the initial entry direction, so pinch
    points do not terminate the walk early.
    """
    y0, x0 = _first_foreground(img.bits)
    mask = _component_mask(img.bits, (y0, x0))
    # pad one background ring so neighbor lookups never leave the grid
    fg = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    fg[1:-1, 1:-1] = mask
    sx, sy = x0 + 1, y0 + 1

    # The walk over (pixel, entry direction) states is deterministic and
    # finite, so it must cycle; the cycle is the closed boundary. Keying on
    # the full state rather than the start pixel alone keeps one-pixel-wide
    # appendages from stopping the trace prematurely.
    seen: dict[tuple[int, int, int], int] = {}
    walk: list[tuple[int, int]] = []
    cx, cy, d = sx, sy, _WEST
    while (cx, cy, d) not in seen:
        seen[(cx, cy, d)] = len(walk)
        walk.append((cx, cy))
        found = False
        for k in range(1, 9):
            dx, dy = _DIRS[(d + k) % 8]
            nx, ny = cx + dx, cy + dy
            if fg[ny, nx]:
                # next entry direction points back at the last background
                # neighbor examined before this hit
                px, py = _DIRS[(d + k - 1) % 8]
                bx, by = cx + px, cy + py
                cx, cy = nx, ny
                d = _DIRS.index((bx - cx, by - cy))
                found = True
                break
        if not found:
            raise DegenerateRegionError("single-pixel region has no boundary to trace")
    cycle = walk[seen[(cx, cy, d)] :]
    if (sx, sy) not in cycle:
        raise DegenerateRegionError("boundary trace never closes through the start pixel")
    k = cycle.index((sx, sy))
    pts = cycle[k:] + cycle[:k]
    if len(pts) < 4:
        raise DegenerateRegionError(
            f"region too thin to form a closed contour ({len(pts)} boundary points)"
        )
    return Contour(np.array(pts, dtype=np.int64) - 1)


def boundary_pixels(img: BinaryImage) -> np.ndarray:
    """Unordered boundary of the first region: foreground pixels with at
    least one background 4-neighbor. Reference predicate for the tracer."""
    y0, x0 = _first_foreground(img.bits)
    mask = _component_mask(img.bits, (y0, x0))
    padded = np.pad(mask, 1)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    ys, xs = np.nonzero(mask & ~interior)
    return np.column_stack([xs, ys]).astype(np.int64)


def angle_series(contour: Contour, delta: int = DEFAULT_TANGENT_OFFSET) -> TimeSeries:
    """Angle between the forward and backward tangent chords at each point.

    The forward chord runs to the point delta positions ahead, the backward
    chord to delta positions behind (indices wrap around the closed curve).
    Values are unsigned radians in [0, pi].
    """
    pts = contour.points.astype(np.float64)
    n = pts.shape[0]
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if n <= 2 * delta:
        raise ValueError(f"contour of {n} points is too short for delta={delta}")
    fwd = np.roll(pts, -delta, axis=0) - pts
    bwd = np.roll(pts, delta, axis=0) - pts
    fn = np.linalg.norm(fwd, axis=1)
    bn = np.linalg.norm(bwd, axis=1)
    degenerate = (fn == 0.0) | (bn == 0.0)
    if degenerate.any():
        raise DegenerateTangentError(int(np.argmax(degenerate)))
    cos = np.sum(fwd * bwd, axis=1) / (fn * bn)
    return TimeSeries(np.arccos(np.clip(cos, -1.0, 1.0)))


def centroid_series(img: BinaryImage, contour: Contour) -> TimeSeries:
    """Distance from each contour point to the traced region's centroid.

    The centroid is the mean coordinate of every foreground pixel in the
    region the contour belongs to, not just its boundary.
    """
    _first_foreground(img.bits)  # raises EmptyImageError on blank input
    x0, y0 = (int(v) for v in contour.points[0])
    mask = _component_mask(img.bits, (y0, x0))
    ys, xs = np.nonzero(mask)
    centroid = np.array([xs.mean(), ys.mean()])
    return TimeSeries(np.linalg.norm(contour.points - centroid, axis=1))


def extract(
    img: GrayImage,
    technique: str = "centroid",
    t: float = DEFAULT_THRESHOLD,
    delta: int = DEFAULT_TANGENT_OFFSET,
    target_len: int = DEFAULT_SERIES_LEN,
    low_pct: float = DEFAULT_LOW_PCT,
    high_pct: float = DEFAULT_HIGH_PCT,
    invert_bits: bool = False,
) -> TimeSeries:
    """Full image-to-series pipeline; deterministic for identical inputs."""
    if technique not in ("angle", "centroid"):
        raise ValueError(f"technique must be 'angle' or 'centroid', got {technique!r}")
    binary = binarize(adjust(img, low_pct, high_pct), t)
    if invert_bits:
        binary = invert(binary)
    contour = trace_boundary(binary)
    if technique == "angle":
        series = angle_series(contour, delta)
    else:
        series = centroid_series(binary, contour)
    return resample(series, target_len)
