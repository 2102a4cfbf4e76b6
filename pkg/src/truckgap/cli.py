"""Command line interface.

Subcommands: estimate, screen, simulate, compare-radar, stats, serve.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .camera import CameraIntrinsics, load_camera_config
from .conflict import WarningThresholds
from .gap import estimate_frame_range
from .screening import RampDatabase
from .stats import (
    distribution_summary,
    linear_regression_anova,
    matched_radar_errors,
    pov_appearance_rate,
    radar_comparison_from_errors,
)
from .store import (
    EventBundle,
    PipelineResult,
    catalog_csv,
    load_event_bundle,
    results_csv,
    run_pipeline,
    save_event_bundle,
)
from .synthetic import SyntheticScene, make_default_camera, synthesize_channels, synthesize_event


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--camera", type=Path, help="camera intrinsics JSON")
    p.add_argument("--thresholds", type=Path, help="warning thresholds JSON")
    p.add_argument("--ramp-db", type=Path, help="ramp points file (lat,lon per line)")
    p.add_argument("--out", type=Path, help="output CSV path")


def _load_camera(args) -> CameraIntrinsics:
    if args.camera is None:
        raise SystemExit("error: --camera is required for this command")
    return load_camera_config(args.camera)


def _load_thresholds(args) -> WarningThresholds:
    if getattr(args, "thresholds", None):
        return WarningThresholds.from_file(args.thresholds)
    return WarningThresholds()


def _load_ramp_db(args) -> RampDatabase | None:
    if getattr(args, "ramp_db", None):
        return RampDatabase.from_file(args.ramp_db)
    return None


def _write_or_print(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out}")


def cmd_estimate(args) -> int:
    cam = _load_camera(args)
    thresholds = _load_thresholds(args)
    ramp_db = _load_ramp_db(args)
    bundles: list[EventBundle] = []
    results: list[PipelineResult] = []
    for path in args.bundles:
        bundle = load_event_bundle(path)
        if args.marker_pattern and bundle.event.marker_pattern != args.marker_pattern:
            from .store import ResultRow

            row = ResultRow(
                event_id=bundle.event.event_id,
                direction=bundle.event.direction,
                subset=bundle.subset,
                outcome="filtered_marker_pattern",
            )
            res = PipelineResult(row=row)
        else:
            res = run_pipeline(bundle, cam, thresholds, ramp_db)
        bundles.append(bundle)
        results.append(res)
        print(f"{bundle.event.event_id}: {res.row.outcome}")
    ordered = sorted(range(len(bundles)), key=lambda i: bundles[i].event.event_id)
    _write_or_print(results_csv([results[i].row for i in ordered]), args.out)
    if args.catalog:
        args.catalog.write_text(catalog_csv(bundles, results), encoding="utf-8")
        print(f"wrote {args.catalog}")
    return 0


def cmd_screen(args) -> int:
    ramp_db = _load_ramp_db(args)
    for path in args.bundles:
        bundle = load_event_bundle(path)
        from .screening import screen_event

        s = screen_event(bundle.event, ramp_db)
        status = (
            "indeterminate"
            if s.indeterminate
            else ("passes" if s.passes else "fails")
        )
        print(
            f"{bundle.event.event_id}: {status} "
            f"(highway={s.highway} straight={s.straight} daytime={s.daytime} "
            f"ramp_region={s.ramp_region})"
        )
    return 0


def _render_frame_image(fa, cam: CameraIntrinsics):
    from PIL import Image, ImageDraw

    from .gap import overlay_segments

    img = Image.new("RGB", (cam.image_width, cam.image_height), (52, 52, 56))
    draw = ImageDraw.Draw(img)
    try:
        seg = overlay_segments(fa, cam)
    except ValueError:
        return img
    for polyline in (seg.left, seg.right):
        draw.line([(p.u, p.v) for p in polyline], fill=(228, 228, 210), width=3)
    u, v = fa.pov.u, fa.pov.v
    draw.rectangle([u - 16, v - 26, u + 16, v - 2], fill=(30, 34, 60))
    draw.line([(u - 18, v), (u + 18, v)], fill=(12, 12, 12), width=4)
    return img


def cmd_simulate(args) -> int:
    cam = load_camera_config(args.camera) if args.camera else make_default_camera()
    out_root = args.out or Path("simulated")
    out_root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for k in range(args.n_events):
        direction = "left" if k % 2 == 0 else "right"
        r0 = float(rng.uniform(*args.r0_range))
        rdot = float(rng.uniform(*args.rdot_range))
        scene = SyntheticScene(
            cam=cam,
            trailer_length=args.trailer_length,
            pixel_noise_sigma=args.noise_px,
            rng_seed=int(args.seed) * 10_000 + k,
        )
        event_id = f"sim{args.seed:04d}_{k:03d}"
        event = synthesize_event(
            event_id,
            r0=r0,
            rdot=rdot,
            n_frames=args.frames,
            scene=scene,
            direction=direction,
        )
        event.channels = synthesize_channels(t_lc=event.t_lc, direction=direction)
        # rearward radar: device-to-vehicle distance, short range only
        radar_t = np.arange(0.0, event.frames[-1].t + 0.05, 0.1)
        radar_z = r0 + rdot * radar_t + args.trailer_length
        radar_mask = radar_z <= 33.0
        radar = (
            np.column_stack([radar_t[radar_mask], radar_z[radar_mask]])
            if radar_mask.any()
            else None
        )
        bundle = EventBundle(
            event=event,
            subset="non-ramp",
            radar=radar,
            ground_truth={"r0_m": r0, "rdot_mps": rdot, "trailer_length_m": args.trailer_length},
        )
        bundle_path = out_root / event_id
        save_event_bundle(bundle, bundle_path)
        if args.images:
            for fa in event.frames:
                img = _render_frame_image(fa, cam)
                img.save(bundle_path / "frames" / f"frame_{fa.t:.3f}.png")
        print(f"wrote {bundle_path}")
    cam_path = out_root / "camera.json"
    import json

    cam_path.write_text(json.dumps(cam.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {cam_path}")
    return 0


def cmd_compare_radar(args) -> int:
    cam = _load_camera(args)
    errors_m: list[float] = []
    errors_pct: list[float] = []
    for path in args.bundles:
        bundle = load_event_bundle(path)
        if bundle.radar is None or bundle.radar.size == 0 or not bundle.event.frames:
            print(f"{bundle.event.event_id}: skipped (no radar or no annotations)")
            continue
        camera_samples = []
        for fa in bundle.event.frames:
            est = estimate_frame_range(fa, cam, bundle.event.lane_width, 0.0)
            if est.qualified:
                # device-to-vehicle distances on both sides of the comparison
                camera_samples.append((fa.t, est.z_c))
        if not camera_samples:
            print(f"{bundle.event.event_id}: skipped (no qualified frames)")
            continue
        # pair within the event; pool errors across events
        em, ep = matched_radar_errors(
            camera_samples, [(float(t), float(r)) for t, r in bundle.radar]
        )
        errors_m.extend(em)
        errors_pct.extend(ep)
        print(f"{bundle.event.event_id}: {len(em)} matched pairs")
    if not errors_m:
        print("no comparable samples")
        return 1
    comp = radar_comparison_from_errors(errors_m, errors_pct)
    print(f"pairs: {comp.n_pairs}")
    print(f"mean error: {comp.mean_err_m:.3f} m ({comp.mean_err_pct:.2f} %)")
    print(f"std error:  {comp.std_err_m:.3f} m ({comp.std_err_pct:.2f} %)")
    if args.out:
        args.out.write_text(
            "n_pairs,mean_err_m,std_err_m,mean_err_pct,std_err_pct\n"
            f"{comp.n_pairs},{comp.mean_err_m!r},{comp.std_err_m!r},"
            f"{comp.mean_err_pct!r},{comp.std_err_pct!r}\n",
            encoding="utf-8",
        )
        print(f"wrote {args.out}")
    return 0


def cmd_stats(args) -> int:
    with open(args.results, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    ok = [r for r in rows if r["outcome"] == "ok"]
    print(f"{len(rows)} events, {len(ok)} with gap results")
    for direction in ("left", "right"):
        sub = [r for r in ok if r["direction"] == direction]
        if not sub:
            print(f"{direction}: no events")
            continue
        r_lc = [float(r["R_lc_m"]) for r in sub]
        rdot = [float(r["rdot_mps"]) for r in sub]
        ds_r = distribution_summary(r_lc)
        ds_rd = distribution_summary(rdot)
        print(
            f"{direction}: n={ds_r.n}  R_lc mean={ds_r.mean:.2f} m p10={ds_r.p10:.2f} m  "
            f"rdot mean={ds_rd.mean:.2f} m/s"
        )
        if len(sub) >= 3 and len(set(r_lc)) > 1:
            reg = linear_regression_anova(r_lc, rdot)
            print(
                f"  rdot ~ R_lc: slope={reg.slope:.4f} adjR2={reg.adjusted_r2:.4f} "
                f"F({reg.df[0]}, {reg.df[1]})={reg.f_stat:.3g} p={reg.p_value:.3g}"
            )
    if args.catalog:
        with open(args.catalog, "r", encoding="utf-8", newline="") as fh:
            cat_rows = [
                {
                    "direction": r["direction"],
                    "has_video": r["has_video"] == "true",
                    "has_pov": r["has_pov"] == "true",
                }
                for r in csv.DictReader(fh)
            ]
        rates = pov_appearance_rate(cat_rows)
        for direction, rate in rates.items():
            shown = "undefined" if rate is None else f"{rate:.1%}"
            print(f"{direction}: POV appearance rate {shown}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cam = _load_camera(args)
    app = create_app(args.root, cam, _load_thresholds(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="truckgap",
        description="Rearward gap estimation for truck lane changes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="run the full pipeline over event bundles")
    p.add_argument("bundles", nargs="+", type=Path)
    _add_common_flags(p)
    p.add_argument("--catalog", type=Path, help="also write a catalog CSV")
    p.add_argument(
        "--marker-pattern",
        help="only process events whose lane-marker pattern equals this label",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("screen", help="apply event screening only")
    p.add_argument("bundles", nargs="+", type=Path)
    p.add_argument("--ramp-db", type=Path)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("simulate", help="generate synthetic event bundles")
    p.add_argument("--out", type=Path, help="output catalog root")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-events", type=int, default=4)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--noise-px", type=float, default=0.0)
    p.add_argument("--trailer-length", type=float, default=14.0)
    p.add_argument("--r0-range", type=float, nargs=2, default=(25.0, 55.0),
                   metavar=("MIN", "MAX"), help="initial range draw bounds (m)")
    p.add_argument("--rdot-range", type=float, nargs=2, default=(-3.0, 2.0),
                   metavar=("MIN", "MAX"), help="range-rate draw bounds (m/s)")
    p.add_argument("--camera", type=Path, help="camera intrinsics JSON (default built-in)")
    p.add_argument("--images", action="store_true", help="render frame PNGs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-radar", help="camera vs radar range statistics")
    p.add_argument("bundles", nargs="+", type=Path)
    _add_common_flags(p)
    p.set_defaults(func=cmd_compare_radar)

    p = sub.add_parser("stats", help="summaries and regression over a results CSV")
    p.add_argument("results", type=Path)
    p.add_argument("--catalog", type=Path, help="catalog CSV for appearance rates")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--root", type=Path, required=True, help="catalog root directory")
    p.add_argument("--camera", type=Path, required=True)
    p.add_argument("--thresholds", type=Path)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
