"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with `pytest -s tests/test_acceptance.py` to see them).

Empirical field statistics (event counts, error tables, regression
values from drive data) are out of scope: the source recordings are
proprietary.  Every criterion here is an analytic or synthetic-oracle
claim with a pinned tolerance.
"""

import math
import time
from datetime import datetime, timedelta

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

from truckgap.conflict import required_deceleration, time_to_collision, warning_decision
from truckgap.gap import FrameAnnotation, estimate_frame_range
from truckgap.screening import ChannelSeries, LaneChangeEvent, RampDatabase, screen_event
from truckgap.stats import linear_regression_anova, radar_error_stats
from truckgap.store import EventBundle, run_pipeline, results_csv, save_event_bundle
from truckgap.synthetic import (
    SyntheticScene,
    make_default_camera,
    pitch_sensitivity_experiment,
    synthesize_channels,
    synthesize_event,
    synthesize_frame,
)
from truckgap.trajectory import DiscardedEvent, compute_weights, process_event_gap, weighted_line_fit

CAM = make_default_camera()


def test_c01_oracle_round_trip():
    start = time.perf_counter()
    worst = {}
    for z in (10.0, 20.0, 30.0, 40.0, 60.0):
        scene = SyntheticScene(pov_distance=z, cam=CAM)
        fa, r_true = synthesize_frame(scene)
        est = estimate_frame_range(fa, CAM, scene.lane_width, scene.trailer_length)
        rel = abs(est.r - r_true) / r_true
        worst[z] = rel
        limit = 0.002 if z <= 40.0 else 0.005
        assert rel < limit, (z, rel)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(
        f"\nPASS  1: oracle round trip, worst rel err "
        f"{max(worst.values()):.2e} (limit 0.5%, 0.2% at <=40 m), {elapsed * 1e3:.0f} ms"
    )


def test_c02_noise_propagation():
    start = time.perf_counter()
    errs = []
    for seed in range(1000):
        scene = SyntheticScene(pov_distance=30.0, cam=CAM, pixel_noise_sigma=0.75, rng_seed=seed)
        fa, r_true = synthesize_frame(scene)
        est = estimate_frame_range(fa, CAM, scene.lane_width, scene.trailer_length)
        errs.append((est.r - r_true) / r_true)
    std = float(np.std(errs, ddof=1))
    elapsed = time.perf_counter() - start
    assert 0.007 <= std <= 0.020, std
    assert elapsed < 10.0
    print(
        f"PASS  2: 0.75 px noise at 30 m -> rel range error std {std * 100:.2f}% "
        f"in [0.7%, 2.0%], {elapsed:.2f} s"
    )


def test_c03_splay_sensitivity():
    scene = SyntheticScene(pov_distance=50.0, cam=CAM)
    assert scene.pose.height == 2.3
    splay_err, lane_err = pitch_sensitivity_experiment(scene, -1.0)
    assert 0.55 <= splay_err <= 0.70, splay_err
    assert abs(lane_err) < 0.02, lane_err
    print(
        f"PASS  3: -1 deg pitch at 50 m -> splay err {splay_err * 100:.1f}% in [55%, 70%], "
        f"lane-width err {abs(lane_err) * 100:.3f}% < 2%"
    )


def test_c04_weighted_least_squares():
    rng = np.random.default_rng(404)
    # exact recovery with arbitrary positive weights
    worst_exact = 0.0
    for _ in range(50):
        a1, a2 = rng.uniform(-4, 4), rng.uniform(-40, 60)
        t = np.sort(rng.uniform(0, 6, 9))
        w = rng.uniform(0.05, 5.0, 9)
        fit = weighted_line_fit(t, a1 * t + a2, w)
        worst_exact = max(worst_exact, abs(fit.a1 - a1), abs(fit.a2 - a2))
    assert worst_exact <= 1e-12, worst_exact

    # noisy instances vs an independent derivative-free minimizer
    def weighted_sse(params, t, r, w):
        resid = r - (params[0] * t + params[1])
        return float(np.sum(w * resid * resid))

    worst_nm = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 12))
        t = np.sort(rng.uniform(0, 5, n))
        r = rng.uniform(20, 50) + rng.uniform(-3, 1) * t + rng.normal(0, 0.4, n)
        w = compute_weights(np.abs(r) + 1.0)
        fit = weighted_line_fit(t, r, w)
        res = minimize(
            weighted_sse,
            np.array([fit.a1 + 0.2, fit.a2 - 0.5]),
            args=(t, r, w),
            method="Nelder-Mead",
            options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 40000, "maxfev": 40000},
        )
        worst_nm = max(worst_nm, abs(fit.a1 - res.x[0]), abs(fit.a2 - res.x[1]))
    assert worst_nm < 1e-6, worst_nm
    print(
        f"PASS  4: weighted LS exact recovery {worst_exact:.1e} <= 1e-12; "
        f"100 noisy fits match Nelder-Mead within {worst_nm:.1e} < 1e-6"
    )


def test_c05_deceleration_identity():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(10_000):
        r = rng.uniform(2.0, 120.0)
        rdot = rng.uniform(-15.0, -0.05)
        ttc = time_to_collision(r, rdot)
        worst = max(worst, abs(required_deceleration(r, rdot) - (-rdot / (2.0 * ttc))))
    assert worst <= 1e-12, worst
    print(f"PASS  5: Rdot^2/(2R) equals -Rdot/(2 TTC) within {worst:.1e} over 1e4 closing pairs")


def test_c06_extrapolation_and_discard_rules():
    worst_r, worst_rdot = 0.0, 0.0
    for r0, rdot, n in ((40.0, -1.5, 10), (55.0, -2.5, 12), (25.0, 0.8, 8)):
        event = synthesize_event(f"x{n}", r0=r0, rdot=rdot, n_frames=n, scene=SyntheticScene(cam=CAM))
        res = process_event_gap(event, CAM)
        truth = r0 + rdot * event.t_lc
        worst_r = max(worst_r, abs(res.r_lc - truth) / truth)
        worst_rdot = max(worst_rdot, abs(res.rdot - rdot))
    assert worst_r < 0.005
    assert worst_rdot < 0.05

    six = synthesize_event("six", r0=40.0, rdot=-1.5, n_frames=6, scene=SyntheticScene(cam=CAM))
    assert isinstance(process_event_gap(six, CAM), DiscardedEvent)

    broken = synthesize_event("brk", r0=40.0, rdot=-1.5, n_frames=9, scene=SyntheticScene(cam=CAM))
    bad = broken.frames[-5]
    broken.frames[-5] = FrameAnnotation(t=bad.t, left=bad.right, right=bad.left, pov=bad.pov)
    res = process_event_gap(broken, CAM)
    assert isinstance(res, DiscardedEvent) and res.frames_qualified == 4
    print(
        f"PASS  6: extrapolation err {worst_r * 100:.3f}% < 0.5%, rate err "
        f"{worst_rdot:.3f} < 0.05 m/s; 6-frame and broken-run fixtures discarded"
    )


def test_c07_warning_truth_table():
    assert warning_decision("left", 2 * 3.99, -2.0).ttc_warning
    assert not warning_decision("left", 2 * 4.01, -2.0).ttc_warning
    assert warning_decision("left", 4.0 / (2 * 0.81), -2.0).d_req_warning
    assert not warning_decision("left", 4.0 / (2 * 0.79), -2.0).d_req_warning
    assert warning_decision("right", 12.6, 1.0).range_warning
    assert not warning_decision("right", 12.8, 1.0).range_warning
    print(
        "PASS  7: warning truth table (TTC 3.99/4.01 s, D_req 0.81/0.79 m/s^2, "
        "right range 12.6/12.8 m)"
    )


def _screening_fixture(min_speed, heading_span, zenith_utc, ramp_offset_m):
    t = np.arange(-20, 80) / 10.0  # exact 0.1 s grid incl. the window edges
    t_start, t_lc, t_end = 0.0, 2.0, 4.0
    progress = np.clip((t - t_start) / (t_end - t_start), 0.0, 1.0)
    lat0, lon0 = 42.3, -83.7
    ch = ChannelSeries(
        t=t,
        speed=np.full_like(t, min_speed),
        heading=90.0 + heading_span * progress,
        lane_offset=np.zeros_like(t),
        lat=np.full_like(t, lat0),
        lon=np.full_like(t, lon0),
        utc_anchor=zenith_utc - timedelta(seconds=t_lc),
    )
    event = LaneChangeEvent(
        event_id="fx", direction="left", t_start=t_start, t_lc=t_lc, t_end=t_end, channels=ch
    )
    db = RampDatabase(points=((lat0 + ramp_offset_m / 111_195.0, lon0),))
    return event, db


def test_c08_screening_matrix():
    # frozen dusk-edge timestamps at (42.3, -83.7): zenith ~94.9 and ~96.9
    # degrees, each >0.8 deg from the 96 deg boundary and cross-checked
    # against an independent solar calculator in test_screening.py
    zenith_pass = datetime(2010, 6, 16, 1, 40)
    zenith_fail = datetime(2010, 6, 16, 1, 54)
    checked = 0
    for speed, speed_ok in ((24.5, False), (24.7, True)):
        for span, span_ok in ((4.9, True), (5.1, False)):
            for utc, day_ok in ((zenith_pass, True), (zenith_fail, False)):
                for ramp_m, ramp_in in ((499.0, True), (501.0, False)):
                    event, db = _screening_fixture(speed, span, utc, ramp_m)
                    s = screen_event(event, db)
                    assert not s.indeterminate
                    assert s.highway == speed_ok, (speed, s)
                    assert s.straight == span_ok, (span, s)
                    assert s.daytime == day_ok, (utc, s)
                    assert s.ramp_region == ramp_in, (ramp_m, s)
                    assert s.passes == (speed_ok and span_ok and day_ok)
                    checked += 1
    assert checked == 16
    print(
        "PASS  8: screening matrix (speed 24.5/24.7, heading 4.9/5.1 deg, "
        "zenith ~95/~97 deg, ramp 499/501 m) matches hand truth on all 16 combos"
    )


def test_c09_regression_against_textbook():
    rng = np.random.default_rng(909)
    x = rng.uniform(5.0, 60.0, 300)
    y = 0.015 * x - 1.2 + rng.normal(0.0, 2.0, 300)
    rep = linear_regression_anova(x, y)
    assert rep.df == (1, 298)

    n = 300
    sx, sy = x.sum(), y.sum()
    slope = (n * (x * y).sum() - sx * sy) / (n * (x * x).sum() - sx * sx)
    intercept = (sy - slope * sx) / n
    ss_res = float(((y - slope * x - intercept) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - ss_res / ss_tot
    adj = 1 - (1 - r2) * (n - 1) / (n - 2)
    f_stat = (ss_tot - ss_res) / (ss_res / (n - 2))
    log_beta = math.lgamma(0.5) + math.lgamma(149.0) - math.lgamma(149.5)

    def f_density(v, d1=1, d2=298):
        return math.exp(
            0.5 * (d1 * math.log(d1 * v) + d2 * math.log(d2) - (d1 + d2) * math.log(d1 * v + d2))
            - math.log(v)
            - log_beta
        )

    p_ref, _ = quad(f_density, f_stat, np.inf, limit=300)
    assert abs(rep.slope - slope) < 1e-6
    assert abs(rep.adjusted_r2 - adj) < 1e-6
    assert abs(rep.f_stat - f_stat) < 1e-6
    assert abs(rep.p_value - p_ref) < 1e-6
    print(
        f"PASS  9: n=300 regression matches textbook evaluation to 1e-6, "
        f"df (1, 298), F={rep.f_stat:.3f}, p={rep.p_value:.4f}"
    )


def test_c10_radar_comparison_fixture():
    comp = radar_error_stats(
        camera=[(0.0, 20.0), (0.5, 30.0)], radar=[(0.02, 21.0), (0.49, 29.0)]
    )
    errors_m = [-1.0, 1.0]
    errors_pct = [-100.0 / 21.0, 100.0 / 29.0]

    def mean(v):
        return sum(v) / len(v)

    def sample_std(v):
        m = mean(v)
        return math.sqrt(sum((x - m) ** 2 for x in v) / (len(v) - 1))

    assert abs(comp.mean_err_m - mean(errors_m)) < 1e-9
    assert abs(comp.std_err_m - sample_std(errors_m)) < 1e-9
    assert abs(comp.mean_err_pct - mean(errors_pct)) < 1e-9
    assert abs(comp.std_err_pct - sample_std(errors_pct)) < 1e-9
    print(
        f"PASS 10: radar comparison fixture reproduces mean/std to 1e-9 "
        f"(mean {comp.mean_err_m:+.2f} m / {comp.mean_err_pct:+.3f}%); published field-study "
        f"error figures require the proprietary source recordings and are documented as such"
    )


def test_c11_determinism_and_idempotence(tmp_path):
    def build(path):
        scene = SyntheticScene(cam=CAM, pixel_noise_sigma=0.75, rng_seed=1111, trailer_length=14.0)
        event = synthesize_event("det0", r0=42.0, rdot=-1.3, n_frames=9, scene=scene)
        event.channels = synthesize_channels(t_lc=event.t_lc)
        save_event_bundle(EventBundle(event=event), path)
        return {
            name: (path / name).read_bytes()
            for name in ("metadata.json", "channels.csv", "frames/annotations.json")
        }

    assert build(tmp_path / "a") == build(tmp_path / "b")

    scene = SyntheticScene(cam=CAM, trailer_length=14.0)
    event = synthesize_event("idem", r0=40.0, rdot=-1.5, n_frames=10, scene=scene)
    event.channels = synthesize_channels(t_lc=event.t_lc)
    bundle = EventBundle(event=event)
    csv1 = results_csv([run_pipeline(bundle, CAM).row])
    csv2 = results_csv([run_pipeline(bundle, CAM).row])
    assert csv1 == csv2
    print("PASS 11: identical seeds give byte-identical bundles; repeated runs identical CSVs")
