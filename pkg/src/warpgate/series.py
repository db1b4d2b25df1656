"""Core value types: time series, band constraints, and series utilities.

Every series entering the matching pipeline is resampled to one shared
length (default 50), so bands and series always agree on indexing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TimeSeries",
    "BandConstraint",
    "LabeledSeries",
    "resample",
    "make_sakoe_chiba",
    "read_series_csv",
    "write_series_csv",
    "znormalize",
]

DEFAULT_SERIES_LEN = 50


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Fixed-length sequence of finite real amplitudes."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"series must be one-dimensional, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"series needs at least 2 points, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series values must be finite (no NaN/inf)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True, eq=False)
class BandConstraint:
    """Per-index warping-window radii.

    radii[i] bounds how far the alignment may stray from the diagonal at
    index i (see the matching engine for the exact cell-permission rule).
    All radii 0 forces the diagonal; all radii n permits every cell.
    """

    radii: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.radii)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValueError("band needs a one-dimensional radius array of length >= 2")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(np.asarray(arr, dtype=np.float64))
            if not np.array_equal(rounded, np.asarray(arr, dtype=np.float64)):
                raise ValueError("band radii must be integers")
            arr = rounded
        arr = arr.astype(np.int64)
        n = arr.shape[0]
        if np.any(arr < 0) or np.any(arr > n):
            raise ValueError(f"band radii must lie in [0, {n}]")
        arr.flags.writeable = False
        object.__setattr__(self, "radii", arr)

    @property
    def length(self) -> int:
        return self.radii.shape[0]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class LabeledSeries:
    """A series tagged with the class/user it belongs to."""

    series: TimeSeries
    label: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("label must be non-empty")


def resample(series: TimeSeries, target_len: int) -> TimeSeries:
    """Resample to exactly target_len points by piecewise-linear interpolation.

    Sample positions are uniformly spaced in parameter space, so the first
    and last values are always preserved. Identity when lengths match.
    """
    if target_len < 2:
        raise ValueError(f"target_len must be >= 2, got {target_len}")
    n = series.length
    if n == target_len:
        return series
    positions = np.arange(target_len, dtype=np.float64) * ((n - 1) / (target_len - 1))
    out = np.interp(positions, np.arange(n, dtype=np.float64), series.values)
    # guard endpoint identity against interpolation round-off
    out[0] = series.values[0]
    out[-1] = series.values[-1]
    return TimeSeries(out)


def make_sakoe_chiba(n: int, c: int) -> BandConstraint:
    """Constant-width band: all radii equal c. c=0 is the pure diagonal,
    c=n removes the constraint entirely."""
    if n < 2:
        raise ValueError(f"band length must be >= 2, got {n}")
    if not 0 <= c <= n:
        raise ValueError(f"width must lie in [0, {n}], got {c}")
    return BandConstraint(np.full(n, c, dtype=np.int64))


def znormalize(series: TimeSeries) -> TimeSeries:
    """Zero-mean unit-variance rescaling; constant series map to all zeros.

    Off by default in the pipeline; exposed for experimentation.
    """
    v = series.values
    sd = v.std()
    if sd < 1e-12:
        return TimeSeries(np.zeros_like(v))
    return TimeSeries((v - v.mean()) / sd)


def read_series_csv(path: str | Path) -> list[LabeledSeries]:
    """Read `label,v1,...,vN` rows (no header, UTF-8)."""
    items: list[LabeledSeries] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 3:
                raise ValueError(f"{path}:{lineno}: need a label and at least 2 values")
            try:
                values = np.array([float(x) for x in row[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value ({exc})") from None
            items.append(LabeledSeries(TimeSeries(values), row[0]))
    return items


def write_series_csv(path: str | Path, items: list[LabeledSeries], decimals: int = 6) -> None:
    """Write `label,v1,...,vN` rows. Values are fixed-point for diffability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for item in items:
            writer.writerow([item.label] + [f"{v:.{decimals}f}" for v in item.series.values])
