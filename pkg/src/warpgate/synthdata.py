"""Deterministic synthetic hand-silhouette generator.

A hand is modeled as a radial function around a center point: a palm disk
plus five raised-cosine finger lobes at fixed angular slots. Per-user
geometry (palm radius, finger lengths and widths) comes from a seeded
draw; per-sample variation adds smooth boundary jitter and a smooth
monotone re-parameterization of the angle axis, which displaces features
along the boundary the way pose changes do, i.e. exactly the kind of
misalignment elastic matching should absorb.

All randomness flows through numpy's default PCG64 generator seeded from
the explicit integers passed in; identical seeds give identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .imageproc import BinaryImage

__all__ = [
    "HandParams",
    "FINGER_SLOTS",
    "gen_user",
    "gen_sample",
    "gen_cohort",
    "write_cohort",
]

# finger center angles (radians): five slots, 42 degrees apart, all in the
# lower half-plane of the raster (y grows downward) so the boundary trace
# always starts on the smooth palm arc rather than on a fingertip
FINGER_SLOTS = np.deg2rad(np.array([6.0, 48.0, 90.0, 132.0, 174.0]))
_SLOT_SPACING = float(FINGER_SLOTS[1] - FINGER_SLOTS[0])

# small fixed bump opposite the fingers (the wrist-side styloid). Its tip
# is the top-most boundary pixel of every sample, pinning the trace start
# to one anatomical feature instead of letting radial jitter slide it
# along the flat palm arc.
_ANCHOR_ANGLE = -np.pi / 2.0
_ANCHOR_WIDTH = 0.13
_ANCHOR_HEIGHT_FRAC = 0.10

DEFAULT_SIZE = 400
DEFAULT_NOISE_SIGMA = 0.03
DEFAULT_WARP_STRENGTH = 0.25

_USER_STREAM = 0x0001
_SAMPLE_STREAM = 0x0002
_FLEX_STREAM = 0x0003
_USER_SEED_STRIDE = 1_000_003  # prime; keeps per-user streams disjoint

_BASE_PALM = 61.0
_BASE_LENGTHS = np.array([58.0, 70.0, 78.0, 72.0, 56.0])
_BASE_WIDTH = 0.27


@dataclass(frozen=True)
class HandParams:
    """Geometry of one synthetic hand plus its sample-variation dials.

    noise_sigma scales boundary jitter relative to the palm radius;
    warp_strength in [0, 1) controls how far features slide along the
    boundary between samples.
    """

    finger_lengths: tuple[float, ...]
    finger_widths: tuple[float, ...]
    palm_radius: float
    noise_sigma: float
    warp_strength: float
    seed: int

    def __post_init__(self):
        if len(self.finger_lengths) != 5 or len(self.finger_widths) != 5:
            raise ValueError("expected exactly 5 finger lengths and widths")
        if min(self.finger_lengths) <= 0 or min(self.finger_widths) <= 0:
            raise ValueError("finger lengths and widths must be positive")
        if self.palm_radius <= 0:
            raise ValueError(f"palm radius must be positive, got {self.palm_radius}")
        if not 0.0 <= self.noise_sigma <= 0.4:
            raise ValueError(f"noise_sigma must lie in [0, 0.4], got {self.noise_sigma}")
        if not 0.0 <= self.warp_strength < 1.0:
            raise ValueError(f"warp_strength must lie in [0, 1), got {self.warp_strength}")
        widths = self.finger_widths
        for k in range(4):
            if widths[k] + widths[k + 1] >= _SLOT_SPACING:
                raise ValueError(
                    f"fingers {k} and {k + 1} overlap: widths {widths[k]:.3f} + "
                    f"{widths[k + 1]:.3f} exceed the slot spacing {_SLOT_SPACING:.3f}"
                )


def gen_user(seed: int, spread: float = 1.0) -> HandParams:
    """Draw one user's hand geometry from seeded uniform ranges.

    spread scales how far individual hands roam from the shared baseline:
    larger values make users easier to tell apart.
    """
    if spread < 0:
        raise ValueError(f"spread must be non-negative, got {spread}")
    rng = np.random.default_rng([seed, _USER_STREAM])
    palm = _BASE_PALM + 9.0 * spread * rng.uniform(-1.0, 1.0)
    lengths = _BASE_LENGTHS * (1.0 + 0.22 * spread * rng.uniform(-1.0, 1.0, size=5))
    widths = np.clip(
        _BASE_WIDTH * (1.0 + 0.18 * spread * rng.uniform(-1.0, 1.0, size=5)), 0.20, 0.35
    )
    return HandParams(
        finger_lengths=tuple(float(v) for v in lengths),
        finger_widths=tuple(float(v) for v in widths),
        palm_radius=float(palm),
        noise_sigma=DEFAULT_NOISE_SIGMA,
        warp_strength=DEFAULT_WARP_STRENGTH,
        seed=int(seed),
    )


def _harmonic_mix(rng: np.random.Generator, orders: np.ndarray, weights: np.ndarray):
    """Random periodic function as amplitudes/phases plus an evaluator."""
    amps = rng.uniform(0.3, 1.0, size=orders.shape[0]) * weights
    phases = rng.uniform(0.0, 2.0 * np.pi, size=orders.shape[0])

    def f(phi: np.ndarray) -> np.ndarray:
        return np.sum(
            amps[:, None] * np.sin(orders[:, None] * phi[None, :] + phases[:, None]), axis=0
        )

    dense = np.linspace(0.0, 2.0 * np.pi, 2048, endpoint=False)
    peak = float(np.max(np.abs(f(dense))))
    slope = float(
        np.max(np.abs(np.sum(orders[:, None] * amps[:, None]
                             * np.cos(orders[:, None] * dense[None, :] + phases[:, None]),
                             axis=0)))
    )
    return f, peak, slope


def _flex_profile(seed: int) -> np.ndarray:
    """Per-user finger mobility: 2 or 3 fingers flex freely between
    samples, the rest stay nearly rigid. Stable per user (depends only on
    the user seed), which is what gives per-user warping constraints
    something user-specific to capture."""
    rng = np.random.default_rng([seed, _FLEX_STREAM])
    amps = np.full(5, 0.15)
    mobile = rng.choice(5, size=2 + int(rng.random() < 0.5), replace=False)
    amps[mobile] = 1.0
    return amps


def _radial_profile(params: HandParams, phi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Boundary radius at each angle, including jitter and the pose warp.

    warp_strength drives two effects: a smooth monotone re-parameterization
    of the angle axis, and per-finger length scaling (fingers flexing a bit
    between scans, each by its user-specific mobility). The scaling
    redistributes boundary arc length between features, which is the
    misalignment elastic matching is meant to absorb. The random draw
    order below is fixed: changing a strength to zero keeps all other
    per-sample variation identical.
    """
    # phi' = phi + w * g(phi), g normalized to unit slope so phi' stays
    # strictly increasing for every warp_strength < 1
    g, _, gslope = _harmonic_mix(rng, np.arange(1, 4, dtype=np.float64),
                                 np.array([1.0, 0.4, 0.15]))
    warped = phi + (params.warp_strength / gslope) * g(phi)

    # flexing is biased toward extension so fingertips stay nearly as
    # prominent as in the rigid pose while still drifting along the contour
    flex = 1.0 + 0.7 * params.warp_strength * _flex_profile(params.seed) \
        * rng.uniform(-0.5, 1.0, size=5)
    lobes = list(zip(
        (*params.finger_lengths, _ANCHOR_HEIGHT_FRAC * params.palm_radius),
        (*flex, 1.0),
        (*params.finger_widths, _ANCHOR_WIDTH),
        (*FINGER_SLOTS, _ANCHOR_ANGLE),
    ))
    rho = np.full_like(phi, params.palm_radius)
    for length, factor, width, slot in lobes:
        d = np.angle(np.exp(1j * (warped - slot)))  # wrapped difference
        inside = np.abs(d) < width
        rho[inside] += length * factor * np.cos(np.pi * d[inside] / (2.0 * width)) ** 2

    # smooth boundary jitter, normalized to unit peak so noise_sigma is the
    # actual fractional amplitude relative to the palm radius
    h, hpeak, _ = _harmonic_mix(rng, np.arange(3, 9, dtype=np.float64), np.ones(6))
    rho += params.noise_sigma * params.palm_radius * (h(phi) / hpeak)
    return rho


def gen_sample(params: HandParams, sample_seed: int, size: int = DEFAULT_SIZE) -> BinaryImage:
    """Rasterize one sample of the hand at the given square resolution."""
    rng = np.random.default_rng([params.seed, int(sample_seed), _SAMPLE_STREAM])
    half = size / 2.0
    ys, xs = np.mgrid[0:size, 0:size]
    dx = xs - half
    dy = ys - half
    phi = np.arctan2(dy, dx).ravel()
    rho = _radial_profile(params, phi, rng)
    if rho.min() <= 2.0:
        raise ValueError("radial profile collapsed; lower noise_sigma")
    if rho.max() >= half - 2.0:
        raise ValueError(
            f"hand radius {rho.max():.1f} does not fit a {size}x{size} raster"
        )
    r = np.hypot(dx, dy).ravel()
    return BinaryImage((r <= rho).reshape(size, size).astype(np.uint8))


def gen_cohort(
    users: int,
    samples_per_user: int,
    seed: int,
    size: int = DEFAULT_SIZE,
    spread: float = 1.0,
    noise_sigma: float | None = None,
    warp_strength: float | None = None,
) -> list[tuple[BinaryImage, str]]:
    """Deterministic labeled cohort of users x samples silhouettes."""
    if users < 2:
        raise ValueError(f"need at least 2 users, got {users}")
    if samples_per_user < 3:
        raise ValueError(f"need at least 3 samples per user, got {samples_per_user}")
    out: list[tuple[BinaryImage, str]] = []
    for u in range(users):
        params = gen_user(seed * _USER_SEED_STRIDE + u, spread)
        if noise_sigma is not None:
            params = replace(params, noise_sigma=noise_sigma)
        if warp_strength is not None:
            params = replace(params, warp_strength=warp_strength)
        for s in range(samples_per_user):
            out.append((gen_sample(params, s, size), f"user{u:02d}"))
    return out


def write_cohort(out_dir, cohort: list[tuple[BinaryImage, str]]) -> str:
    """Write PGM files plus a `path,label` manifest; returns the manifest path."""
    import csv
    from pathlib import Path

    from .pnm import write_pgm

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    counters: dict[str, int] = {}
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for img, label in cohort:
            k = counters.get(label, 0)
            counters[label] = k + 1
            name = f"{label}_{k:02d}.pgm"
            write_pgm(out / name, img.bits.astype(np.float64))
            writer.writerow([name, label])
    return str(manifest)
