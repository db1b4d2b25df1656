"""Enrollment, claim verification, and the FAR/FRR/TSR evaluation protocol.

A user's profile stores enrollment series, the band learned against the
enrollment cohort, and an individual distance threshold. A claim is
accepted when the probe's best template distance is at most the user's
threshold times a system-wide multiplier G. Sweeping G trades false
accepts against false rejects; the report records both rates per grid
point plus the interpolated equal-error crossing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dtw import pairwise_distances, stack_series
from .errors import LengthMismatchError, ProfileStoreError
from .learning import LearnConfig, learn_user_band
from .series import BandConstraint, LabeledSeries, TimeSeries

__all__ = [
    "UserProfile",
    "Claim",
    "TrialOutcome",
    "VerifyResult",
    "EvalReport",
    "enroll",
    "enroll_all",
    "verify",
    "collect_trials",
    "sweep_report",
    "evaluate_protocol",
    "default_g_grid",
    "save_profiles",
    "load_profiles",
    "write_report_csv",
    "write_summary_json",
    "write_roc_csv",
]

THETA_FLOOR = 1e-9


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    templates: tuple[TimeSeries, ...]
    band: BandConstraint
    theta: float

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if len(self.templates) < 2:
            raise ValueError(f"{self.user_id}: need >= 2 templates, got {len(self.templates)}")
        lens = {t.length for t in self.templates}
        if lens != {self.band.length}:
            raise LengthMismatchError(
                f"{self.user_id}: template lengths {sorted(lens)} != band length {self.band.length}"
            )
        if not self.theta > 0:
            raise ValueError(f"{self.user_id}: threshold must be positive, got {self.theta}")


@dataclass(frozen=True)
class Claim:
    """A probe presented under a claimed identity; truth_id is only known
    to the evaluation harness."""

    probe: TimeSeries
    claimed_id: str
    truth_id: str


@dataclass(frozen=True)
class TrialOutcome:
    """G-independent record of one claim: the matched distance and the
    claimed user's threshold. Accept iff distance <= theta * G."""

    claimed_id: str
    truth_id: str
    distance: float
    theta: float

    @property
    def genuine(self) -> bool:
        return self.claimed_id == self.truth_id

    @property
    def score(self) -> float:
        return self.distance / self.theta


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    distance: float


@dataclass(frozen=True)
class EvalReport:
    """Threshold sweep: one row per G value plus the interpolated
    equal-error operating point."""

    g_values: np.ndarray
    false_accepts: np.ndarray
    false_rejects: np.ndarray
    far: np.ndarray   # percent
    frr: np.ndarray   # percent
    tsr: np.ndarray   # percent
    genuine_total: int
    imposter_total: int
    eer: float
    eer_g: float
    eer_tsr: float

    @property
    def total_access(self) -> int:
        return self.genuine_total + self.imposter_total


def _min_template_distance(probe: TimeSeries, profile: UserProfile, p: float) -> float:
    stacked = stack_series([probe, *profile.templates])
    d = pairwise_distances(
        stacked, np.array([0]), np.arange(1, stacked.shape[0]), profile.band, p
    )
    return float(d.min())


def _loo_threshold(tt: np.ndarray, rule: str) -> float:
    """Threshold from a template-by-template distance matrix: each series'
    nearest other template, aggregated per the rule."""
    masked = tt.copy()
    np.fill_diagonal(masked, np.inf)
    nearest = masked.min(axis=1)
    if rule == "loo_max":
        theta = float(nearest.max())
    elif rule == "mean_plus_3std":
        theta = float(nearest.mean() + 3.0 * nearest.std())
    else:
        raise ValueError(f"unknown threshold rule {rule!r}")
    return max(theta, THETA_FLOOR)


def enroll(
    user_id: str,
    series: list[TimeSeries],
    cohort: list[LabeledSeries],
    config: LearnConfig | None = None,
    band: BandConstraint | None = None,
    p: float = 2.0,
    threshold_rule: str = "loo_max",
) -> UserProfile:
    """Build a profile: learn the user's band against the cohort (unless a
    fixed band is supplied) and derive the individual threshold as the
    tightest value accepting every enrollment series under leave-one-out.
    """
    if len(series) < 2:
        raise ValueError(f"{user_id}: enrollment needs >= 2 series, got {len(series)}")
    if band is None:
        band = learn_user_band(series, cohort, config, p)
    stacked = stack_series(series)
    idx = np.arange(stacked.shape[0])
    tt = pairwise_distances(stacked, idx, idx, band, p)
    theta = _loo_threshold(tt, threshold_rule)
    return UserProfile(user_id=user_id, templates=tuple(series), band=band, theta=theta)


def enroll_all(
    dataset: list[LabeledSeries],
    config: LearnConfig | None = None,
    band: BandConstraint | None = None,
    p: float = 2.0,
    threshold_rule: str = "loo_max",
) -> list[UserProfile]:
    """Enroll every label in the dataset, using the other labels' series as
    the learning cohort. A fixed band (e.g. constant width) bypasses
    learning entirely for baseline runs."""
    groups: dict[str, list[TimeSeries]] = {}
    for item in dataset:
        groups.setdefault(item.label, []).append(item.series)
    profiles = []
    for label in sorted(groups):
        cohort = [item for item in dataset if item.label != label]
        profiles.append(
            enroll(label, groups[label], cohort, config=config, band=band, p=p,
                   threshold_rule=threshold_rule)
        )
    return profiles


def verify(profile: UserProfile, probe: TimeSeries, g: float, p: float = 2.0) -> VerifyResult:
    """Accept iff the best template distance is at most theta * g
    (inclusive at the boundary)."""
    if g <= 0:
        raise ValueError(f"global threshold multiplier must be positive, got {g}")
    if probe.length != profile.band.length:
        raise LengthMismatchError(
            f"probe length {probe.length} != profile series length {profile.band.length}"
        )
    d = _min_template_distance(probe, profile, p)
    return VerifyResult(accepted=d <= profile.theta * g, distance=d)


def _match_template(probe: TimeSeries, profile: UserProfile) -> int | None:
    for j, t in enumerate(profile.templates):
        if np.array_equal(probe.values, t.values):
            return j
    return None


def collect_trials(
    profiles: list[UserProfile],
    dataset: list[LabeledSeries],
    p: float = 2.0,
    threshold_rule: str = "loo_max",
) -> list[TrialOutcome]:
    """One genuine and U-1 imposter claims per dataset series.

    For the genuine claim the true user's profile is re-built without the
    probe: the probe's own template is dropped and the threshold is
    recomputed over the remaining ones, so a series never matches itself.
    Probes absent from the template set are used as-is.
    """
    by_id = {prof.user_id: prof for prof in profiles}
    if len(by_id) != len(profiles):
        raise ValueError("duplicate user ids in profiles")
    if len(by_id) < 2:
        raise ValueError(f"need >= 2 enrolled users, got {len(by_id)}")
    counts: dict[str, int] = {}
    for item in dataset:
        counts[item.label] = counts.get(item.label, 0) + 1
    missing = sorted(set(counts) - set(by_id))
    if missing:
        raise ValueError(f"dataset labels without a profile: {missing}")
    thin = sorted(lab for lab, k in counts.items() if k < 3)
    if thin:
        raise ValueError(
            f"users need >= 3 series for leave-one-out evaluation, too few for: {thin}"
        )

    X = stack_series([item.series for item in dataset])
    n = X.shape[0]
    all_rows = np.arange(n, dtype=np.int64)
    # per profile: dataset-to-template distances and template-to-template
    # distances, both under that profile's band
    probe_dists: dict[str, np.ndarray] = {}
    template_dists: dict[str, np.ndarray] = {}
    for prof in profiles:
        stacked = np.vstack([X, stack_series(list(prof.templates))])
        tcols = np.arange(n, stacked.shape[0], dtype=np.int64)
        probe_dists[prof.user_id] = pairwise_distances(stacked, all_rows, tcols, prof.band, p)
        template_dists[prof.user_id] = pairwise_distances(stacked, tcols, tcols, prof.band, p)

    outcomes: list[TrialOutcome] = []
    for i, item in enumerate(dataset):
        truth = item.label
        for prof in profiles:
            row = probe_dists[prof.user_id][i]
            if prof.user_id == truth:
                j0 = _match_template(item.series, prof)
                if j0 is None:
                    d = float(row.min())
                    theta = prof.theta
                else:
                    if len(prof.templates) < 3:
                        raise ValueError(
                            f"{prof.user_id}: leave-one-out needs >= 3 templates"
                        )
                    keep = np.arange(len(prof.templates)) != j0
                    d = float(row[keep].min())
                    tt = template_dists[prof.user_id][np.ix_(keep, keep)]
                    theta = _loo_threshold(tt, threshold_rule)
            else:
                d = float(row.min())
                theta = prof.theta
            outcomes.append(
                TrialOutcome(claimed_id=prof.user_id, truth_id=truth, distance=d, theta=theta)
            )
    return outcomes


def default_g_grid(g_min: float = 0.05, g_max: float = 5.0, points: int = 200) -> np.ndarray:
    """Geometric grid of system-wide threshold multipliers."""
    if not 0 < g_min < g_max:
        raise ValueError(f"need 0 < g_min < g_max, got ({g_min}, {g_max})")
    if points < 2:
        raise ValueError(f"need >= 2 grid points, got {points}")
    return np.geomspace(g_min, g_max, points)


def sweep_report(outcomes: list[TrialOutcome], g_grid: np.ndarray) -> EvalReport:
    """Aggregate trial outcomes over the multiplier grid.

    FAR counts imposter claims accepted, FRR genuine claims rejected, and
    TSR the fraction of all claims decided correctly; the equal-error
    point is located by linear interpolation between the two grid points
    where FAR crosses FRR.
    """
    g_grid = np.asarray(g_grid, dtype=np.float64)
    if g_grid.ndim != 1 or g_grid.size < 2 or np.any(np.diff(g_grid) <= 0):
        raise ValueError("g_grid must be a strictly increasing vector of >= 2 points")
    gen_scores = np.sort([t.score for t in outcomes if t.genuine])
    imp_scores = np.sort([t.score for t in outcomes if not t.genuine])
    if gen_scores.size == 0 or imp_scores.size == 0:
        raise ValueError("need both genuine and imposter trials")
    fa = np.searchsorted(imp_scores, g_grid, side="right").astype(np.int64)
    fr = gen_scores.size - np.searchsorted(gen_scores, g_grid, side="right").astype(np.int64)
    far = 100.0 * fa / imp_scores.size
    frr = 100.0 * fr / gen_scores.size
    total = gen_scores.size + imp_scores.size
    tsr = 100.0 * (1.0 - (fa + fr) / total)

    diff = far - frr
    if diff[0] >= 0:
        k0 = k1 = 0
        t = 0.0
    elif diff[-1] < 0:
        k0 = k1 = diff.size - 1
        t = 0.0
    else:
        k1 = int(np.argmax(diff >= 0))
        k0 = k1 - 1
        t = float(-diff[k0] / (diff[k1] - diff[k0]))
    eer_g = float(g_grid[k0] + t * (g_grid[k1] - g_grid[k0]))
    eer_far = float(far[k0] + t * (far[k1] - far[k0]))
    eer_frr = float(frr[k0] + t * (frr[k1] - frr[k0]))
    eer_tsr = float(tsr[k0] + t * (tsr[k1] - tsr[k0]))
    return EvalReport(
        g_values=g_grid,
        false_accepts=fa,
        false_rejects=fr,
        far=far,
        frr=frr,
        tsr=tsr,
        genuine_total=int(gen_scores.size),
        imposter_total=int(imp_scores.size),
        eer=(eer_far + eer_frr) / 2.0,
        eer_g=eer_g,
        eer_tsr=eer_tsr,
    )


def evaluate_protocol(
    profiles: list[UserProfile],
    dataset: list[LabeledSeries],
    g_grid: np.ndarray | None = None,
    p: float = 2.0,
    threshold_rule: str = "loo_max",
) -> EvalReport:
    if g_grid is None:
        g_grid = default_g_grid()
    return sweep_report(collect_trials(profiles, dataset, p, threshold_rule), g_grid)


# --- persistence -----------------------------------------------------------


def save_profiles(path: str | Path, profiles: list[UserProfile]) -> None:
    if not profiles:
        raise ValueError("nothing to save: empty profile list")
    series_len = profiles[0].band.length
    doc = {
        "series_len": series_len,
        "users": [
            {
                "id": prof.user_id,
                "templates": [t.values.tolist() for t in prof.templates],
                "band": {"length": prof.band.length, "radii": prof.band.radii.tolist()},
                "theta": prof.theta,
            }
            for prof in profiles
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ProfileStoreError(f"missing field {where}.{key}")
    return obj[key]


def load_profiles(path: str | Path) -> list[UserProfile]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProfileStoreError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ProfileStoreError("top-level value must be an object")
    series_len = _require(doc, "series_len", "$")
    users = _require(doc, "users", "$")
    if not isinstance(users, list):
        raise ProfileStoreError("$.users must be a list")
    profiles = []
    for i, entry in enumerate(users):
        where = f"$.users[{i}]"
        if not isinstance(entry, dict):
            raise ProfileStoreError(f"{where} must be an object")
        uid = _require(entry, "id", where)
        templates = _require(entry, "templates", where)
        band_doc = _require(entry, "band", where)
        theta = _require(entry, "theta", where)
        if not isinstance(band_doc, dict):
            raise ProfileStoreError(f"{where}.band must be an object")
        band_len = _require(band_doc, "length", f"{where}.band")
        radii = _require(band_doc, "radii", f"{where}.band")
        try:
            band = BandConstraint(np.asarray(radii))
            if band.length != band_len or band.length != series_len:
                raise ValueError(f"band length {band.length} != declared {band_len}/{series_len}")
            prof = UserProfile(
                user_id=str(uid),
                templates=tuple(TimeSeries(np.asarray(t, dtype=np.float64)) for t in templates),
                band=band,
                theta=float(theta),
            )
        except (ValueError, TypeError, LengthMismatchError) as exc:
            raise ProfileStoreError(f"{where}: {exc}") from None
        profiles.append(prof)
    return profiles


# --- report artifacts ------------------------------------------------------


def write_report_csv(path: str | Path, report: EvalReport) -> None:
    lines = ["G,far,frr,tsr,fa,fr"]
    for k in range(report.g_values.size):
        lines.append(
            f"{report.g_values[k]:.6f},{report.far[k]:.6f},{report.frr[k]:.6f},"
            f"{report.tsr[k]:.6f},{report.false_accepts[k]},{report.false_rejects[k]}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_json(path: str | Path, report: EvalReport) -> None:
    doc = {
        "eer": round(report.eer, 6),
        "eer_g": round(report.eer_g, 6),
        "tsr_at_eer": round(report.eer_tsr, 6),
        "genuine_total": report.genuine_total,
        "imposter_total": report.imposter_total,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_roc_csv(path: str | Path, report: EvalReport) -> None:
    """FAR/FRR pairs per grid point, for external plotting."""
    lines = ["far,frr"]
    for k in range(report.g_values.size):
        lines.append(f"{report.far[k]:.6f},{report.frr[k]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
