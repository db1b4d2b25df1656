"""Per-class band learning by queue-driven hill climbing.

Each class owns one band. Starting from the zero band (forward search) or
the unconstrained band (backward search), whole index segments of the
radius array are grown or shrunk one step at a time. A move is kept when
the training heuristic does not get worse: ties go to the adjusted band,
which in forward mode is the wider of the two and in backward mode the
tighter. A rejected segment is split in half and both halves are queued,
so the search refines from whole-band moves down to narrow spans.

The heuristic orders candidates by leave-one-out 1-NN accuracy first and
breaks ties with a separation ratio (mean of nearest-wrong-class over
nearest-true-class distance across queries).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dtw import pairwise_distances, stack_series
from .errors import DegenerateClassesError
from .series import BandConstraint, LabeledSeries, TimeSeries, make_sakoe_chiba

__all__ = [
    "Segment",
    "LearnConfig",
    "HeuristicValue",
    "evaluate",
    "learn_bands",
    "learn_user_band",
    "save_band",
    "load_band",
]

DEFAULT_FALLBACK_WIDTH_FRAC = 0.10
_SEPARATION_FLOOR = 1e-12


@dataclass(frozen=True, order=True)
class HeuristicValue:
    """Lexicographic training objective: accuracy first, separation second."""

    accuracy: float
    separation: float

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if self.separation <= 0.0:
            raise ValueError(f"separation must be positive, got {self.separation}")


@dataclass(frozen=True)
class Segment:
    """Inclusive 1-based index span of a band's radius array."""

    start: int
    end: int

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"need 1 <= start <= end, got ({self.start}, {self.end})")


@dataclass(frozen=True)
class LearnConfig:
    direction: str = "forward"
    step: int = 1
    width_floor: int = 1
    heuristic: str = "accuracy_then_distance"

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be forward or backward, got {self.direction!r}")
        if self.step < 1:
            raise ValueError(f"step must be >= 1, got {self.step}")
        if self.width_floor < 1:
            raise ValueError(f"width_floor must be >= 1, got {self.width_floor}")
        if self.heuristic != "accuracy_then_distance":
            raise ValueError(f"unknown heuristic {self.heuristic!r}")


def _sorted_train(train: list[LabeledSeries]) -> list[LabeledSeries]:
    # stable: preserves file order within each label, fixing 1-NN tie breaks
    return sorted(train, key=lambda item: item.label)


def _check_train(train: list[LabeledSeries]) -> None:
    labels = [item.label for item in train]
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    if len(counts) < 2:
        raise DegenerateClassesError(f"need >= 2 classes, got {sorted(counts)}")
    thin = sorted(lab for lab, k in counts.items() if k < 2)
    if thin:
        raise DegenerateClassesError(f"classes with fewer than 2 series: {thin}")


class _CachedEvaluator:
    """Leave-one-out 1-NN state over a labeled pool with per-class bands.

    Distances to a class's members are computed under that class's band,
    so adjusting one band only invalidates that class's columns. Blocks
    can be saved and restored to undo a rejected move cheaply.
    """

    def __init__(self, train: list[LabeledSeries], p: float = 2.0):
        self.p = p
        self.labels = np.array([item.label for item in train])
        self.X = stack_series([item.series for item in train])
        n = len(train)
        self.all_idx = np.arange(n, dtype=np.int64)
        self.class_cols = {
            lab: np.flatnonzero(self.labels == lab).astype(np.int64)
            for lab in dict.fromkeys(self.labels.tolist())
        }
        self.D = np.full((n, n), np.inf)
        self._same = self.labels[:, None] == self.labels[None, :]

    def set_band(self, label: str, band: BandConstraint) -> np.ndarray:
        """Recompute the label's columns; returns the previous block."""
        cols = self.class_cols[label]
        previous = self.D[:, cols].copy()
        block = pairwise_distances(self.X, self.all_idx, cols, band, self.p)
        self.D[:, cols] = block
        self.D[cols, cols] = np.inf  # a query never matches itself
        return previous

    def restore_block(self, label: str, block: np.ndarray) -> None:
        self.D[:, self.class_cols[label]] = block

    def value(self) -> HeuristicValue:
        nearest = np.argmin(self.D, axis=1)  # first minimum wins ties
        accuracy = float(np.mean(self.labels[nearest] == self.labels))
        d_true = np.min(np.where(self._same, self.D, np.inf), axis=1)
        d_wrong = np.min(np.where(self._same, np.inf, self.D), axis=1)
        ratios = d_wrong / np.maximum(d_true, _SEPARATION_FLOOR)
        return HeuristicValue(accuracy, float(np.mean(ratios)))


def evaluate(
    train: list[LabeledSeries],
    bands: dict[str, BandConstraint],
    p: float = 2.0,
) -> HeuristicValue:
    """Score per-class bands on the training pool.

    Accuracy is leave-one-out 1-NN where the distance from a query to a
    candidate of class c uses band c; separation is the mean ratio of the
    nearest wrong-class distance to the nearest true-class distance.
    """
    ordered = _sorted_train(train)
    _check_train(ordered)
    missing = sorted({item.label for item in ordered} - set(bands))
    if missing:
        raise DegenerateClassesError(f"no band supplied for classes: {missing}")
    ev = _CachedEvaluator(ordered, p)
    for label in ev.class_cols:
        ev.set_band(label, bands[label])
    return ev.value()


def learn_bands(
    train: list[LabeledSeries],
    cfg: LearnConfig | None = None,
    p: float = 2.0,
) -> dict[str, BandConstraint]:
    """Learn one band per class by segment-queue hill climbing.

    Guaranteed to terminate: every kept move strictly drives radii toward
    the direction's bound and every rejected segment is consumed (possibly
    splitting into two finer children first).
    """
    cfg = cfg or LearnConfig()
    ordered = _sorted_train(train)
    _check_train(ordered)
    ev = _CachedEvaluator(ordered, p)
    labels = list(ev.class_cols)
    n = ev.X.shape[1]

    if cfg.direction == "forward":
        radii = {lab: np.zeros(n, dtype=np.int64) for lab in labels}
    else:
        radii = {lab: np.full(n, n, dtype=np.int64) for lab in labels}
    for lab in labels:
        ev.set_band(lab, BandConstraint(radii[lab]))
    best = ev.value()

    queues = {lab: deque([Segment(1, n)]) for lab in labels}
    sign = 1 if cfg.direction == "forward" else -1
    # keeps are bounded by the total radius budget, failures by the
    # subdivision tree; the cap only guards against implementation bugs
    cap = len(labels) * (n * n // cfg.step + 4 * n + 64)
    attempts = 0

    while any(queues[lab] for lab in labels):
        for lab in labels:
            if not queues[lab]:
                continue
            seg = queues[lab].popleft()
            attempts += 1
            if attempts > cap:
                raise RuntimeError("band learning exceeded its move budget")
            r = radii[lab]
            span = slice(seg.start - 1, seg.end)
            before = r[span].copy()
            r[span] = np.clip(before + sign * cfg.step, 0, n)
            if np.array_equal(r[span], before):
                continue  # fully clamped; nothing to try here or below
            saved = ev.set_band(lab, BandConstraint(r))
            val = ev.value()
            if val >= best:  # ties go to the adjusted (wider/tighter) band
                best = val
                queues[lab].append(seg)
            else:
                r[span] = before
                ev.restore_block(lab, saved)
                if (seg.end - seg.start) / 2 >= cfg.width_floor:
                    mid = (seg.start + seg.end) // 2
                    queues[lab].append(Segment(seg.start, mid - 1))
                    queues[lab].append(Segment(mid, seg.end))
    return {lab: BandConstraint(radii[lab]) for lab in labels}


def learn_user_band(
    own: list[TimeSeries],
    others: list[LabeledSeries],
    cfg: LearnConfig | None = None,
    p: float = 2.0,
    fallback_width_frac: float = DEFAULT_FALLBACK_WIDTH_FRAC,
) -> BandConstraint:
    """Band for one user: two-class learning of own series against the
    pooled series of everyone else.

    Without at least two counterexample series there is nothing to learn
    against, so a constant-width band (10% of the series length by
    default) is returned instead.
    """
    if len(own) < 2:
        raise ValueError(f"need at least 2 enrollment series, got {len(own)}")
    n = own[0].length
    if len(others) < 2:
        return make_sakoe_chiba(n, max(1, round(fallback_width_frac * n)))
    train = [LabeledSeries(s, "self") for s in own]
    train += [LabeledSeries(item.series, "rest") for item in others]
    return learn_bands(train, cfg, p)["self"]


def save_band(path, band: BandConstraint) -> None:
    """Write a band as JSON: {"length": N, "radii": [r1, ..., rN]}."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"length": band.length, "radii": band.radii.tolist()}, fh)


def load_band(path) -> BandConstraint:
    import json

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("length", "radii"):
        if key not in doc:
            raise ValueError(f"{path}: missing field {key!r}")
    band = BandConstraint(np.asarray(doc["radii"]))
    if band.length != doc["length"]:
        raise ValueError(f"{path}: radii length {band.length} != declared {doc['length']}")
    return band
