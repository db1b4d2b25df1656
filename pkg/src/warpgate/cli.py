"""Command-line surface: synth, convert, dist, learn, enroll, verify,
evaluate, roc.

Exit codes: 0 success, 1 data error, 2 usage error. All floating-point
output is fixed at 6 decimals so runs can be diffed. WARPGATE_THREADS
caps worker parallelism (0 or unset picks an automatic value).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import pnm
from .errors import WarpgateError
from .imageproc import extract
from .learning import LearnConfig, learn_bands, load_band, save_band
from .series import (
    DEFAULT_SERIES_LEN,
    LabeledSeries,
    make_sakoe_chiba,
    read_series_csv,
    write_series_csv,
)
from .synthdata import (
    DEFAULT_NOISE_SIGMA,
    DEFAULT_SIZE,
    DEFAULT_WARP_STRENGTH,
    gen_cohort,
    write_cohort,
)
from .verification import (
    default_g_grid,
    enroll_all,
    evaluate_protocol,
    load_profiles,
    save_profiles,
    verify,
    write_report_csv,
    write_roc_csv,
    write_summary_json,
)
from .dtw import dtw


def _cmd_synth(args) -> int:
    cohort = gen_cohort(
        args.users, args.samples, args.seed,
        size=args.size, spread=args.spread,
        noise_sigma=args.noise, warp_strength=args.warp,
    )
    manifest = write_cohort(args.out, cohort)
    print(manifest)
    return 0


def _read_manifest(path: Path) -> list[tuple[Path, str]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected `path,label`, got {row!r}")
            rows.append((path.parent / row[0], row[1]))
    if not rows:
        raise ValueError(f"{path}: empty manifest")
    return rows


def _cmd_convert(args) -> int:
    manifest = _read_manifest(Path(args.manifest))
    out_rows: list[LabeledSeries] = []
    failures: list[tuple[Path, str]] = []
    for img_path, label in manifest:
        try:
            img = pnm.read_image(img_path)
            series = extract(
                img,
                technique=args.technique,
                t=args.threshold,
                delta=args.delta,
                target_len=args.len,
                low_pct=args.adjust_low,
                high_pct=args.adjust_high,
                invert_bits=args.invert,
            )
            out_rows.append(LabeledSeries(series, label))
        except (WarpgateError, ValueError, OSError) as exc:
            failures.append((img_path, str(exc)))
    write_series_csv(args.out, out_rows)
    for img_path, message in failures:
        print(f"error: {img_path}: {message}", file=sys.stderr)
    return 1 if failures else 0


def _band_from_args(args, n: int):
    if args.band is not None:
        return load_band(args.band)
    if args.sc_width is not None:
        return make_sakoe_chiba(n, args.sc_width)
    return make_sakoe_chiba(n, n)  # unconstrained


def _cmd_dist(args) -> int:
    items = read_series_csv(args.series)
    for idx in (args.i, args.j):
        if not 0 <= idx < len(items):
            raise ValueError(f"row {idx} out of range (file has {len(items)} series)")
    q = items[args.i].series
    c = items[args.j].series
    band = _band_from_args(args, q.length)
    print(f"{dtw(q, c, band, p=args.p).distance:.6f}")
    return 0


def _cmd_learn(args) -> int:
    train = read_series_csv(args.train)
    cfg = LearnConfig(direction=args.direction, step=args.step, width_floor=args.floor)
    bands = learn_bands(train, cfg, p=args.p)
    if args.label is None:
        print(
            f"error: --label is required; available: {', '.join(sorted(bands))}",
            file=sys.stderr,
        )
        return 2
    if args.label not in bands:
        raise ValueError(f"label {args.label!r} not in training set ({', '.join(sorted(bands))})")
    save_band(args.out, bands[args.label])
    print(args.out)
    return 0


def _enroll_from_args(args, dataset: list[LabeledSeries]):
    if args.mode == "sc":
        n = dataset[0].series.length
        return enroll_all(dataset, band=make_sakoe_chiba(n, args.sc_width),
                          p=args.p, threshold_rule=args.threshold_rule)
    cfg = LearnConfig(direction=args.direction, step=args.step, width_floor=args.floor)
    return enroll_all(dataset, config=cfg, p=args.p, threshold_rule=args.threshold_rule)


def _cmd_enroll(args) -> int:
    if args.direction == "both":
        print("error: --direction both is only valid for evaluate", file=sys.stderr)
        return 2
    dataset = read_series_csv(args.series)
    profiles = _enroll_from_args(args, dataset)
    save_profiles(args.out, profiles)
    print(f"{args.out}: {len(profiles)} users")
    return 0


def _cmd_verify(args) -> int:
    profiles = {prof.user_id: prof for prof in load_profiles(args.store)}
    if args.user not in profiles:
        raise ValueError(f"no profile for user {args.user!r}")
    items = read_series_csv(args.probe)
    if not 0 <= args.row < len(items):
        raise ValueError(f"row {args.row} out of range (file has {len(items)} series)")
    result = verify(profiles[args.user], items[args.row].series, args.g, p=args.p)
    print(f"{'accept' if result.accepted else 'reject'} {result.distance:.6f}")
    return 0


def _cmd_evaluate(args) -> int:
    dataset = read_series_csv(args.series)
    grid = default_g_grid(args.g_min, args.g_max, args.g_points)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    directions = ["forward", "backward"] if args.direction == "both" else [args.direction]
    if args.mode == "sc":
        directions = [directions[0]]  # no learning; direction is irrelevant
    for direction in directions:
        args.direction = direction
        profiles = _enroll_from_args(args, dataset)
        report = evaluate_protocol(profiles, dataset, grid, p=args.p,
                                   threshold_rule=args.threshold_rule)
        suffix = f"_{direction}" if len(directions) > 1 else ""
        write_report_csv(out_dir / f"report{suffix}.csv", report)
        write_summary_json(out_dir / f"summary{suffix}.json", report)
        write_roc_csv(out_dir / f"roc{suffix}.csv", report)
        tag = f"mode={args.mode}" + (f" direction={direction}" if args.mode == "rk" else "")
        print(f"{tag} eer={report.eer:.6f}% eer_g={report.eer_g:.6f} "
              f"tsr_at_eer={report.eer_tsr:.6f}%")
    return 0


def _cmd_roc(args) -> int:
    lines = Path(args.report).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    try:
        far_col, frr_col = header.index("far"), header.index("frr")
    except ValueError:
        raise ValueError(f"{args.report}: expected a report CSV with far/frr columns") from None
    out = ["far,frr"]
    for line in lines[1:]:
        cells = line.split(",")
        out.append(f"{float(cells[far_col]):.6f},{float(cells[frr_col]):.6f}")
    Path(args.out).write_text("\n".join(out) + "\n", encoding="utf-8")
    print(args.out)
    return 0


def _add_p(parser) -> None:
    parser.add_argument("--p", type=float, default=2.0,
                        help="root exponent of the distance (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpgate",
        description="Hand-silhouette verification via boundary series and banded DTW",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic silhouette cohort")
    p.add_argument("--users", type=int, default=10, help="number of users (default 10)")
    p.add_argument("--samples", type=int, default=6, help="samples per user (default 6)")
    p.add_argument("--seed", type=int, default=7, help="master seed (default 7)")
    p.add_argument("--out", required=True, help="output directory for PGMs + manifest.csv")
    p.add_argument("--size", type=int, default=DEFAULT_SIZE,
                   help=f"square raster size (default {DEFAULT_SIZE})")
    p.add_argument("--spread", type=float, default=1.0,
                   help="inter-user geometry spread (default 1.0)")
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE_SIGMA,
                   help=f"boundary jitter fraction (default {DEFAULT_NOISE_SIGMA})")
    p.add_argument("--warp", type=float, default=DEFAULT_WARP_STRENGTH,
                   help=f"pose warp strength (default {DEFAULT_WARP_STRENGTH})")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("convert", help="convert images listed in a manifest to series CSV")
    p.add_argument("--manifest", required=True, help="CSV of `path,label` rows")
    p.add_argument("--out", required=True, help="output series CSV")
    p.add_argument("--technique", choices=("angle", "centroid"), default="centroid",
                   help="conversion technique (default centroid)")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="binarization threshold (default 0.5)")
    p.add_argument("--delta", type=int, default=10,
                   help="tangent chord offset in boundary pixels (default 10)")
    p.add_argument("--len", type=int, default=DEFAULT_SERIES_LEN,
                   help=f"output series length (default {DEFAULT_SERIES_LEN})")
    p.add_argument("--invert", action="store_true",
                   help="treat dark pixels as foreground")
    p.add_argument("--adjust-low", type=float, default=1.0,
                   help="low stretch percentile (default 1)")
    p.add_argument("--adjust-high", type=float, default=99.0,
                   help="high stretch percentile (default 99)")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("dist", help="distance between two series of a CSV")
    p.add_argument("--series", required=True, help="series CSV")
    p.add_argument("--i", type=int, required=True, help="query row index (0-based)")
    p.add_argument("--j", type=int, required=True, help="reference row index (0-based)")
    p.add_argument("--band", help="band JSON file")
    p.add_argument("--sc-width", type=int, help="constant band width instead of a file")
    _add_p(p)
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("learn", help="learn per-class bands and save one of them")
    p.add_argument("--train", required=True, help="training series CSV")
    p.add_argument("--direction", choices=("forward", "backward"), default="forward",
                   help="search direction (default forward)")
    p.add_argument("--step", type=int, default=1, help="radius increment per move (default 1)")
    p.add_argument("--floor", type=int, default=1,
                   help="minimum half-width to keep subdividing (default 1)")
    p.add_argument("--label", help="class whose band to write")
    p.add_argument("--out", required=True, help="output band JSON")
    _add_p(p)
    p.set_defaults(func=_cmd_learn)

    def add_enroll_options(q):
        q.add_argument("--mode", choices=("rk", "sc"), default="rk",
                       help="per-user learned bands or a global constant band (default rk)")
        q.add_argument("--sc-width", type=int, default=5,
                       help="constant band width for sc mode (default 5)")
        q.add_argument("--direction", choices=("forward", "backward", "both"),
                       default="forward", help="learning direction for rk mode")
        q.add_argument("--step", type=int, default=1)
        q.add_argument("--floor", type=int, default=1)
        q.add_argument("--threshold-rule", choices=("loo_max", "mean_plus_3std"),
                       default="loo_max", help="individual threshold rule")
        _add_p(q)

    p = sub.add_parser("enroll", help="enroll every user of a series CSV into a store")
    p.add_argument("--series", required=True, help="series CSV")
    p.add_argument("--out", required=True, help="output profile store JSON")
    add_enroll_options(p)
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("verify", help="verify one probe against a claimed user")
    p.add_argument("--store", required=True, help="profile store JSON")
    p.add_argument("--user", required=True, help="claimed user id")
    p.add_argument("--probe", required=True, help="series CSV holding the probe")
    p.add_argument("--row", type=int, default=0, help="probe row index (default 0)")
    p.add_argument("--g", type=float, default=1.0,
                   help="system-wide threshold multiplier (default 1)")
    _add_p(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("evaluate", help="run the full verification protocol over a G grid")
    p.add_argument("--series", required=True, help="series CSV")
    p.add_argument("--out-dir", required=True, help="directory for report/summary/roc files")
    p.add_argument("--g-min", type=float, default=0.05)
    p.add_argument("--g-max", type=float, default=5.0)
    p.add_argument("--g-points", type=int, default=200)
    add_enroll_options(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("roc", help="extract FAR/FRR pairs from a report CSV")
    p.add_argument("--report", required=True, help="report CSV from `evaluate`")
    p.add_argument("--out", required=True, help="output ROC CSV")
    p.set_defaults(func=_cmd_roc)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WarpgateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
