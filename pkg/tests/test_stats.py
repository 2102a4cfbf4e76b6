import math

import numpy as np
import pytest
from scipy.integrate import quad

from truckgap.gap import estimate_frame_range
from truckgap.stats import (
    SingularRegressionError,
    distribution_summary,
    linear_regression_anova,
    pov_appearance_rate,
    radar_error_stats,
)
from truckgap.synthetic import SyntheticScene, synthesize_frame


def _f_upper_tail_by_quadrature(f_stat, d1, d2):
    """Independent p-value oracle: numerically integrate the F density."""
    log_beta = math.lgamma(d1 / 2) + math.lgamma(d2 / 2) - math.lgamma((d1 + d2) / 2)

    def density(x):
        return math.exp(
            0.5 * (d1 * math.log(d1 * x) + d2 * math.log(d2) - (d1 + d2) * math.log(d1 * x + d2))
            - math.log(x)
            - log_beta
        )

    val, _ = quad(density, f_stat, np.inf, limit=200)
    return val


def test_distribution_summary_constant():
    s = distribution_summary([5, 5, 5])
    assert s.n == 3 and s.mean == 5.0 and s.std == 0.0


def test_distribution_summary_percentile_rule():
    s = distribution_summary(list(range(1, 101)))
    assert abs(s.p10 - 10.9) < 1e-12
    assert abs(s.p50 - 50.5) < 1e-12
    assert abs(s.p90 - 90.1) < 1e-12


def test_distribution_summary_singleton():
    s = distribution_summary([3.0])
    assert s.p10 == s.p50 == s.p90 == 3.0
    assert s.std == 0.0


def test_distribution_summary_empty_rejected():
    with pytest.raises(ValueError):
        distribution_summary([])


def test_regression_perfect_fit():
    x = np.arange(10.0)
    rep = linear_regression_anova(x, 2 * x + 1)
    assert abs(rep.slope - 2.0) < 1e-12
    assert abs(rep.intercept - 1.0) < 1e-12
    assert rep.r2 == 1.0
    assert math.isinf(rep.f_stat)
    assert rep.p_value == 0.0


def test_regression_matches_textbook_oracle():
    rng = np.random.default_rng(101)
    x = rng.uniform(0, 10, 20)
    y = 1.8 * x + 4.0 + rng.normal(0, 2.0, 20)
    rep = linear_regression_anova(x, y)

    # textbook normal-equation evaluation, written independently
    n = len(x)
    sx, sy = x.sum(), y.sum()
    sxx, sxy = (x * x).sum(), (x * y).sum()
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    ss_res = float(((y - slope * x - intercept) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - ss_res / ss_tot
    adj = 1 - (1 - r2) * (n - 1) / (n - 2)
    f = (ss_tot - ss_res) / (ss_res / (n - 2))

    assert abs(rep.slope - slope) < 1e-9
    assert abs(rep.intercept - intercept) < 1e-9
    assert abs(rep.r2 - r2) < 1e-9
    assert abs(rep.adjusted_r2 - adj) < 1e-9
    assert abs(rep.f_stat - f) < 1e-9
    assert abs(rep.p_value - _f_upper_tail_by_quadrature(rep.f_stat, 1, n - 2)) < 1e-9


def test_regression_df_for_300_events():
    rng = np.random.default_rng(300)
    x = rng.uniform(0, 60, 300)
    y = 0.02 * x + rng.normal(0, 2.5, 300)
    rep = linear_regression_anova(x, y)
    assert rep.df == (1, 298)


def test_regression_constant_x_rejected():
    with pytest.raises(SingularRegressionError):
        linear_regression_anova([2.0, 2.0, 2.0, 2.0], [1.0, 2.0, 3.0, 4.0])


def test_radar_error_stats_fixture():
    comp = radar_error_stats(
        camera=[(0.0, 20.0), (0.5, 30.0)], radar=[(0.02, 21.0), (0.49, 29.0)]
    )
    assert comp.n_pairs == 2
    assert abs(comp.mean_err_m - 0.0) < 1e-12
    assert abs(comp.mean_err_pct - (-100 / 21 + 100 / 29) / 2) < 1e-9


def test_radar_error_stats_identical_series():
    series = [(0.0, 20.0), (0.5, 18.0), (1.0, 16.0)]
    comp = radar_error_stats(series, series)
    assert comp.mean_err_m == 0.0 and comp.std_err_m == 0.0
    assert comp.mean_err_pct == 0.0 and comp.std_err_pct == 0.0


def test_radar_error_stats_window_drop():
    comp = radar_error_stats(
        camera=[(0.0, 20.0), (1.0, 30.0)], radar=[(0.0, 21.0), (1.4, 29.0)]
    )
    assert comp.n_pairs == 1  # second camera sample is 0.4 s from nearest radar


def test_radar_error_stats_no_overlap():
    with pytest.raises(ValueError):
        radar_error_stats(camera=[(0.0, 20.0)], radar=[(5.0, 21.0)])


def test_pov_appearance_rate():
    rows = [
        {"direction": "left", "has_video": True, "has_pov": True},
        {"direction": "left", "has_video": True, "has_pov": False},
        {"direction": "left", "has_video": True, "has_pov": False},
        {"direction": "left", "has_video": True, "has_pov": False},
        {"direction": "left", "has_video": False, "has_pov": False},
        {"direction": "right", "has_video": True, "has_pov": True},
    ]
    rates = pov_appearance_rate(rows)
    assert rates["left"] == 0.25
    assert rates["right"] == 1.0


def test_pov_appearance_rate_undefined_without_video():
    rates = pov_appearance_rate([{"direction": "left", "has_video": False, "has_pov": False}])
    assert rates["left"] is None
    assert rates["right"] is None


# --- invariants -------------------------------------------------------------


def test_regression_coefficients_minimize_sse():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.uniform(0, 10, 15)
        y = rng.uniform(-2, 2) * x + rng.normal(0, 1, 15)
        rep = linear_regression_anova(x, y)

        def sse(a, b):
            return float(((y - a * x - b) ** 2).sum())

        best = sse(rep.slope, rep.intercept)
        for da in (-1e-4, 1e-4):
            for db in (-1e-4, 1e-4):
                assert sse(rep.slope + da, rep.intercept + db) >= best - 1e-12


def test_adjusted_r2_bounded_by_r2():
    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.uniform(0, 10, 12)
        y = 0.5 * x + rng.normal(0, 1.5, 12)
        rep = linear_regression_anova(x, y)
        assert rep.adjusted_r2 <= rep.r2 + 1e-15


def test_p_value_monotone_in_f():
    rng = np.random.default_rng(9)
    d2 = 28
    fs = np.sort(rng.uniform(0.1, 30, 20))
    from scipy.special import betainc

    ps = [float(betainc(d2 / 2, 0.5, d2 / (d2 + f))) for f in fs]
    assert all(b < a + 1e-15 for a, b in zip(ps, ps[1:]))


def test_radar_stats_antisymmetric():
    cam_series = [(0.0, 20.0), (0.5, 25.0), (1.0, 31.0)]
    radar_series = [(0.0, 21.0), (0.5, 24.0), (1.0, 30.0)]
    fwd = radar_error_stats(cam_series, radar_series)
    rev = radar_error_stats(radar_series, cam_series)
    assert abs(fwd.mean_err_m + rev.mean_err_m) < 1e-12


def test_lane_width_overestimate_gives_negative_bias():
    # if the real lane is wider than the tracker's figure, ranges are
    # consistently underestimated relative to ground truth
    errors = []
    for z in (15.0, 20.0, 25.0, 30.0):
        scene = SyntheticScene(pov_distance=z, lane_width=3.7)
        fa, _ = synthesize_frame(scene)
        est = estimate_frame_range(fa, scene.cam, 3.6, 0.0)
        errors.append(est.z_c - z)
    assert all(e < 0 for e in errors)


def test_matched_errors_pool_across_events():
    from truckgap.stats import matched_radar_errors, radar_comparison_from_errors

    em_a, ep_a = matched_radar_errors([(0.0, 20.0)], [(0.0, 21.0)])
    em_b, ep_b = matched_radar_errors([(0.0, 31.0)], [(0.0, 30.0)])
    comp = radar_comparison_from_errors(em_a + em_b, ep_a + ep_b)
    assert comp.n_pairs == 2
    assert abs(comp.mean_err_m - 0.0) < 1e-12
