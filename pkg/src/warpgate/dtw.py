"""Dynamic time warping under per-index band constraints.

The permitted-cell rule (1-based indices): cell (i, j) is inside the band
iff j - i <= radii[i] and i - j <= radii[j]. With all radii equal to c this
reduces to the classic constant-width band |i - j| <= c; all zeros forces
the diagonal (Euclidean case) and all n permits every cell (unconstrained).

The accumulated cost is gamma[i,j] = (q_i - c_j)^2 + min of the three
predecessor cells; the reported distance is gamma[n,m] ** (1/p), p=2 by
default so the zero-band case coincides with the Euclidean distance.

Unequal-length inputs are supported by re-centering each row's window on
the scaled diagonal j ~ i*m/n; the verification pipeline never uses this
(everything is resampled to one shared length first).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .errors import LengthMismatchError, NoFeasiblePathError
from .series import BandConstraint, TimeSeries

__all__ = [
    "WarpingPath",
    "DtwResult",
    "dtw",
    "dtw_oracle",
    "lower_bound_diag",
    "band_mask",
    "pairwise_distances",
]

ORACLE_MAX_LEN = 8

# workqueue has no external library dependencies; must be set before the
# first parallel kernel compiles
numba.config.THREADING_LAYER = "workqueue"


def _configure_threads() -> None:
    raw = os.environ.get("WARPGATE_THREADS", "").strip()
    if not raw:
        return
    cap = int(raw)
    if cap > 0:
        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
    # 0 means auto: keep numba's default


_configure_threads()


@dataclass(frozen=True)
class WarpingPath:
    """Monotone alignment path, 1-based (i, j) pairs from (1,1) to (n,m)."""

    steps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: WarpingPath | None = None


def band_mask(band: BandConstraint, n: int, m: int) -> np.ndarray:
    """Boolean (n, m) grid of permitted cells, 0-based.

    Single source of truth for the permission rule; both the DP engine and
    the enumeration oracle follow it.
    """
    if band.length != n:
        raise LengthMismatchError(f"band length {band.length} != series length {n}")
    r = band.radii
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, m + 1)[None, :]
    if n == m:
        return ((j - i) <= r[:, None]) & ((i - j) <= r[None, :])
    # scaled diagonal for unequal lengths
    diag = i * (m / n)
    return (j <= np.ceil(diag) + r[:, None]) & (j >= np.floor(diag) - r[:, None])


@njit(cache=True)
def _row_lower_bounds(radii):
    # jlo[i] (1-based row i at slot i-1) = smallest j with j + radii[j] >= i,
    # using the prefix maximum so the bound is valid for non-monotone radii
    n = radii.shape[0]
    jlo = np.empty(n, dtype=np.int64)
    reach = np.empty(n, dtype=np.int64)
    best = -1
    for j in range(1, n + 1):
        a = j + radii[j - 1]
        if a > best:
            best = a
        reach[j - 1] = best
    ptr = 1
    for i in range(1, n + 1):
        while ptr < n and reach[ptr - 1] < i:
            ptr += 1
        jlo[i - 1] = ptr
    return jlo


@njit(cache=True)
def _cost_equal(q, c, radii, jlo):
    # pre-root accumulated cost at (n, n); rows swept with two rolling buffers
    n = q.shape[0]
    prev = np.full(n + 1, np.inf)
    cur = np.full(n + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        ri = radii[i - 1]
        hi = i + ri
        if hi > n:
            hi = n
        for j in range(n + 1):
            cur[j] = np.inf
        for j in range(jlo[i - 1], hi + 1):
            if i - j <= radii[j - 1]:
                d = q[i - 1] - c[j - 1]
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = d * d + best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[n]


@njit(cache=True)
def _gamma_matrix_equal(q, c, radii, jlo):
    # full accumulated-cost matrix, kept only when a path is requested
    n = q.shape[0]
    g = np.full((n + 1, n + 1), np.inf)
    g[0, 0] = 0.0
    for i in range(1, n + 1):
        ri = radii[i - 1]
        hi = i + ri
        if hi > n:
            hi = n
        for j in range(jlo[i - 1], hi + 1):
            if i - j <= radii[j - 1]:
                d = q[i - 1] - c[j - 1]
                best = g[i - 1, j - 1]
                if g[i - 1, j] < best:
                    best = g[i - 1, j]
                if g[i, j - 1] < best:
                    best = g[i, j - 1]
                g[i, j] = d * d + best
    return g


@njit(cache=True)
def _gamma_matrix_general(q, c, radii):
    # unequal lengths: window re-centered on the scaled diagonal j ~ i*m/n
    n = q.shape[0]
    m = c.shape[0]
    g = np.full((n + 1, m + 1), np.inf)
    g[0, 0] = 0.0
    scale = m / n
    for i in range(1, n + 1):
        ri = radii[i - 1]
        diag = i * scale
        lo = int(np.floor(diag)) - ri
        hi = int(np.ceil(diag)) + ri
        if lo < 1:
            lo = 1
        if hi > m:
            hi = m
        for j in range(lo, hi + 1):
            d = q[i - 1] - c[j - 1]
            best = g[i - 1, j - 1]
            if g[i - 1, j] < best:
                best = g[i - 1, j]
            if g[i, j - 1] < best:
                best = g[i, j - 1]
            g[i, j] = d * d + best
    return g


@njit(cache=True, parallel=True)
def _block_costs(X, qidx, tidx, radii, jlo, out):
    # out[a, b] = pre-root cost between rows X[qidx[a]] and X[tidx[b]]
    for a in prange(qidx.shape[0]):
        q = X[qidx[a]]
        for b in range(tidx.shape[0]):
            out[a, b] = _cost_equal(q, X[tidx[b]], radii, jlo)


def _check_inputs(q: TimeSeries, c: TimeSeries, band: BandConstraint, p: float) -> None:
    if band.length != q.length:
        raise LengthMismatchError(f"band length {band.length} != query length {q.length}")
    if p <= 0:
        raise ValueError(f"root exponent must be positive, got {p}")


def _backtrack(g: np.ndarray) -> WarpingPath:
    n = g.shape[0] - 1
    m = g.shape[1] - 1
    steps = [(n, m)]
    i, j = n, m
    while (i, j) != (1, 1):
        best = np.inf
        nxt = None
        for pi, pj in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
            if pi >= 1 and pj >= 1 and g[pi, pj] < best:
                best = g[pi, pj]
                nxt = (pi, pj)
        if nxt is None:
            raise NoFeasiblePathError("backtrack ran into a forbidden region")
        i, j = nxt
        steps.append((i, j))
    steps.reverse()
    return WarpingPath(tuple(steps))


def dtw(
    q: TimeSeries,
    c: TimeSeries,
    band: BandConstraint,
    p: float = 2.0,
    return_path: bool = False,
) -> DtwResult:
    """Banded DTW distance between q and c; optionally the optimal path.

    The band is indexed by q. Equal lengths always admit a path (the
    diagonal is never excluded); unequal lengths may not, in which case
    NoFeasiblePathError is raised.
    """
    _check_inputs(q, c, band, p)
    radii = band.radii
    if q.length == c.length:
        jlo = _row_lower_bounds(radii)
        if return_path:
            g = _gamma_matrix_equal(q.values, c.values, radii, jlo)
            cost = g[-1, -1]
        else:
            cost = _cost_equal(q.values, c.values, radii, jlo)
            g = None
    else:
        g = _gamma_matrix_general(q.values, c.values, radii)
        cost = g[-1, -1]
        if not return_path:
            g = None
    if not np.isfinite(cost):
        raise NoFeasiblePathError(
            f"band admits no path between lengths {q.length} and {c.length}"
        )
    distance = float(cost) ** (1.0 / p)
    path = _backtrack(g) if return_path else None
    return DtwResult(distance=distance, path=path)


def dtw_oracle(q: TimeSeries, c: TimeSeries, band: BandConstraint, p: float = 2.0) -> DtwResult:
    """Exhaustive reference: minimum over every monotone in-band path.

    Exponential in the series lengths; capped at ORACLE_MAX_LEN points.
    """
    _check_inputs(q, c, band, p)
    n, m = q.length, c.length
    if n > ORACLE_MAX_LEN or m > ORACLE_MAX_LEN:
        raise ValueError(f"oracle is limited to lengths <= {ORACLE_MAX_LEN}")
    mask = band_mask(band, n, m)
    qv, cv = q.values, c.values
    best_cost = np.inf
    best_path: tuple[tuple[int, int], ...] | None = None
    if mask[0, 0]:
        stack: list[tuple[int, int]] = []

        def walk(i: int, j: int, acc: float) -> None:
            nonlocal best_cost, best_path
            d = qv[i] - cv[j]
            acc += d * d
            stack.append((i + 1, j + 1))
            if i == n - 1 and j == m - 1:
                if acc < best_cost:
                    best_cost = acc
                    best_path = tuple(stack)
            else:
                for di, dj in ((1, 1), (1, 0), (0, 1)):
                    ni, nj = i + di, j + dj
                    if ni < n and nj < m and mask[ni, nj]:
                        walk(ni, nj, acc)
            stack.pop()

        walk(0, 0, 0.0)
    if best_path is None:
        raise NoFeasiblePathError("band admits no path")
    return DtwResult(distance=float(best_cost) ** (1.0 / p), path=WarpingPath(best_path))


def lower_bound_diag(q: TimeSeries, c: TimeSeries, p: float = 2.0) -> float:
    """Diagonal-only distance; exactly dtw with the zero band."""
    if q.length != c.length:
        raise LengthMismatchError(f"lengths differ: {q.length} != {c.length}")
    if p <= 0:
        raise ValueError(f"root exponent must be positive, got {p}")
    diff = q.values - c.values
    return float(np.sum(diff * diff)) ** (1.0 / p)


def pairwise_distances(
    X: np.ndarray,
    query_idx: np.ndarray,
    template_idx: np.ndarray,
    band: BandConstraint,
    p: float = 2.0,
) -> np.ndarray:
    """Rooted distances between rows of the stacked series matrix X.

    out[a, b] = dtw(X[query_idx[a]], X[template_idx[b]], band). All rows
    share one length equal to the band length.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != band.length:
        raise LengthMismatchError(f"band length {band.length} != series length {X.shape[1]}")
    qidx = np.asarray(query_idx, dtype=np.int64)
    tidx = np.asarray(template_idx, dtype=np.int64)
    out = np.empty((qidx.shape[0], tidx.shape[0]), dtype=np.float64)
    jlo = _row_lower_bounds(band.radii)
    _block_costs(X, qidx, tidx, band.radii, jlo, out)
    return out ** (1.0 / p)


def stack_series(items: list[TimeSeries]) -> np.ndarray:
    """Stack equal-length series into a C-contiguous (N, L) matrix."""
    lens = {s.length for s in items}
    if len(lens) > 1:
        raise LengthMismatchError(f"series lengths differ: {sorted(lens)}")
    return np.ascontiguousarray(np.stack([s.values for s in items]))
