"""Descriptive and inferential statistics over batches of gap results."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import betainc

# Camera samples pair with the nearest radar sample inside this window
# (half the 2 Hz frame gap); unmatched samples are dropped.
RADAR_PAIRING_WINDOW_S = 0.25


class SingularRegressionError(ValueError):
    """Predictor is constant; the regression slope is undefined."""


@dataclass(frozen=True)
class DistributionSummary:
    n: int
    mean: float
    std: float
    p10: float
    p50: float
    p90: float


@dataclass(frozen=True)
class RegressionReport:
    """Simple linear regression with the one-predictor ANOVA F-test."""

    slope: float
    intercept: float
    r2: float
    adjusted_r2: float
    f_stat: float
    df: tuple[int, int]
    p_value: float


@dataclass(frozen=True)
class RadarComparison:
    """Signed camera-minus-radar error statistics over matched pairs."""

    n_pairs: int
    mean_err_m: float
    std_err_m: float
    mean_err_pct: float
    std_err_pct: float


def _sample_std(values: np.ndarray) -> float:
    # n-1 denominator; a singleton has no dispersion
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def distribution_summary(values: Sequence[float]) -> DistributionSummary:
    """n, mean, sample std, and the 10/50/90 percentiles.

    Percentiles interpolate linearly between closest order statistics.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty sample")
    p10, p50, p90 = np.percentile(v, [10, 50, 90])
    return DistributionSummary(
        n=int(v.size),
        mean=float(v.mean()),
        std=_sample_std(v),
        p10=float(p10),
        p50=float(p50),
        p90=float(p90),
    )


def linear_regression_anova(x: Sequence[float], y: Sequence[float]) -> RegressionReport:
    """Ordinary least squares y on x with adjusted R^2 and the F-test.

    The F upper-tail p-value uses the regularized incomplete beta
    function.  A perfect fit reports f_stat as +inf and p_value 0.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.size != yv.size:
        raise ValueError("x and y must have equal lengths")
    n = int(xv.size)
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    sxx = float(((xv - xv.mean()) ** 2).sum())
    if sxx <= 0:
        raise SingularRegressionError("constant predictor")

    sxy = float(((xv - xv.mean()) * (yv - yv.mean())).sum())
    slope = sxy / sxx
    intercept = float(yv.mean()) - slope * float(xv.mean())

    syy = float(((yv - yv.mean()) ** 2).sum())
    sse = float(((yv - (slope * xv + intercept)) ** 2).sum())
    r2 = 1.0 if syy == 0 else 1.0 - sse / syy
    adjusted_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    df = (1, n - 2)
    if r2 >= 1.0 or sse == 0:
        f_stat = math.inf
        p_value = 0.0
    else:
        f_stat = r2 / (1.0 - r2) * (n - 2)
        # upper tail of F(1, n-2) via the incomplete beta representation
        d1, d2 = df
        p_value = float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f_stat)))
    return RegressionReport(
        slope=slope,
        intercept=intercept,
        r2=r2,
        adjusted_r2=adjusted_r2,
        f_stat=f_stat,
        df=df,
        p_value=p_value,
    )


def matched_radar_errors(
    camera: Sequence[tuple[float, float]], radar: Sequence[tuple[float, float]]
) -> tuple[list[float], list[float]]:
    """Signed (meter, percent) errors over nearest-in-time matched pairs.

    Each camera sample pairs with the nearest radar sample within
    RADAR_PAIRING_WINDOW_S; unmatched samples are dropped.  Pair within
    one event only: event-relative times from different events must not
    be mixed.
    """
    if not camera or not radar:
        raise ValueError("both series must be non-empty")
    radar_t = np.asarray([t for t, _ in radar], dtype=float)
    radar_r = np.asarray([r for _, r in radar], dtype=float)
    errors_m = []
    errors_pct = []
    for t, r_cam in camera:
        i = int(np.argmin(np.abs(radar_t - t)))
        if abs(radar_t[i] - t) > RADAR_PAIRING_WINDOW_S:
            continue
        err = r_cam - radar_r[i]
        errors_m.append(float(err))
        errors_pct.append(float(err / radar_r[i] * 100.0))
    return errors_m, errors_pct


def radar_comparison_from_errors(
    errors_m: Sequence[float], errors_pct: Sequence[float]
) -> RadarComparison:
    """Summarize matched-pair errors, e.g. pooled across events."""
    if not errors_m:
        raise ValueError("no camera/radar pairs within the pairing window")
    em = np.asarray(errors_m, dtype=float)
    ep = np.asarray(errors_pct, dtype=float)
    return RadarComparison(
        n_pairs=int(em.size),
        mean_err_m=float(em.mean()),
        std_err_m=_sample_std(em),
        mean_err_pct=float(ep.mean()),
        std_err_pct=_sample_std(ep),
    )


def radar_error_stats(
    camera: Sequence[tuple[float, float]], radar: Sequence[tuple[float, float]]
) -> RadarComparison:
    """Camera-vs-radar range errors for one event's two series.

    The radar value is the ground-truth denominator of the percent
    error.
    """
    errors_m, errors_pct = matched_radar_errors(camera, radar)
    return radar_comparison_from_errors(errors_m, errors_pct)


def pov_appearance_rate(
    catalog_rows: Iterable[Mapping],
) -> dict[str, Optional[float]]:
    """Per-direction ratio of events with a following vehicle on video.

    rate = count(has_video and has_pov) / count(has_video); None for a
    direction with no video events.
    """
    counts: dict[str, list[int]] = {"left": [0, 0], "right": [0, 0]}
    for row in catalog_rows:
        direction = row["direction"]
        if direction not in counts:
            continue
        if row["has_video"]:
            counts[direction][0] += 1
            if row["has_pov"]:
                counts[direction][1] += 1
    return {
        d: (with_pov / video if video else None) for d, (video, with_pov) in counts.items()
    }
