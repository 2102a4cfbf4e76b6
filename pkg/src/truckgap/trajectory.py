"""Weighted first-order least-squares smoothing of per-event range series.

The range series of one lane-change event is filtered with a weighted
straight-line fit (relative acceleration between the vehicles is small,
so the range curve is nearly linear) and extrapolated forward to the
lane-change instant, which usually falls between video frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .camera import CameraIntrinsics
from .conflict import WarningFlags, WarningThresholds, required_deceleration, time_to_collision, warning_decision
from .gap import estimate_frame_range

if TYPE_CHECKING:
    from .screening import LaneChangeEvent

MIN_QUALIFIED_FRAMES = 7

# One 2 Hz frame gap plus slack; larger gaps mean the last usable frame
# is stale relative to the lane-change time.
MAX_EXTRAPOLATION_GAP_S = 0.6


class SingularFitError(ValueError):
    """Design matrix is singular (all sample times identical)."""


class StaleFrameError(ValueError):
    """Lane-change time too far past the last usable frame."""


class MalformedEventError(ValueError):
    """Event is missing data required for gap processing."""


@dataclass(frozen=True)
class LineFit:
    """First-order weighted fit R(t) = a1 * t + a2.

    a1 is the range rate in m/s.  t_ref is the conditioning origin used
    internally; r_at_ref is the fitted value there, kept so evaluation
    near the data stays free of cancellation.
    """

    a1: float
    a2: float
    t_ref: float
    n: int
    weighted_sse: float
    r_at_ref: float

    def value_at(self, t: float) -> float:
        return self.a1 * (t - self.t_ref) + self.r_at_ref


@dataclass(frozen=True)
class GapResult:
    """Fitted and extrapolated kinematics at the lane-change time."""

    event_id: str
    direction: str
    r_lc: float
    rdot: float
    delta_t: float
    t_n: float
    frames_used: int
    ttc: Optional[float]
    d_req: float
    warning: WarningFlags


@dataclass(frozen=True)
class DiscardedEvent:
    """Typed outcome for events that fail the qualification rules."""

    event_id: str
    reason: str
    frames_qualified: int


def compute_weights(ranges: Sequence[float]) -> np.ndarray:
    """Residual weights w_i = R_min / R_i.

    Closer vehicles get larger weights: pixel localization error maps to
    range error roughly in proportion to range, so near samples carry
    more information.  The maximum weight is exactly 1.
    """
    r = np.asarray(ranges, dtype=float)
    if r.size == 0:
        raise ValueError("empty range series")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("all ranges must be positive and finite")
    return r.min() / r


def weighted_line_fit(
    times: Sequence[float], ranges: Sequence[float], weights: Sequence[float]
) -> LineFit:
    """Minimize sum of w_i * (R_i - a1 t_i - a2)^2 over (a1, a2).

    Solved via the 2x2 weighted normal equations with times shifted to
    their mean for conditioning.
    """
    t = np.asarray(times, dtype=float)
    r = np.asarray(ranges, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (t.size == r.size == w.size):
        raise ValueError("times, ranges, weights must have equal lengths")
    if t.size < 2:
        raise ValueError(f"need at least 2 samples, got {t.size}")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")

    t_ref = float(t.mean())
    s = t - t_ref
    sw = float(w.sum())
    swt = float((w * s).sum())
    swtt = float((w * s * s).sum())
    swr = float((w * r).sum())
    swtr = float((w * s * r).sum())
    det = sw * swtt - swt * swt
    if det <= 0 or not math.isfinite(det):
        raise SingularFitError("all sample times identical; line fit is singular")

    a1 = (sw * swtr - swt * swr) / det
    b = (swtt * swr - swt * swtr) / det  # fitted value at t_ref
    residuals = r - (a1 * s + b)
    sse = float((w * residuals * residuals).sum())
    return LineFit(a1=a1, a2=b - a1 * t_ref, t_ref=t_ref, n=int(t.size), weighted_sse=sse, r_at_ref=b)


def extrapolate_to_lane_change(fit: LineFit, t_n: float, t_lc: float) -> float:
    """Project the fitted range curve forward: R(t_lc) = a1 * dt + R(t_n).

    R(t_n) is the fitted value at t_n, not the raw last sample, so the
    extrapolation starts from the smoothed curve.
    """
    delta_t = t_lc - t_n
    if delta_t < 0 or delta_t > MAX_EXTRAPOLATION_GAP_S:
        raise StaleFrameError(
            f"gap {delta_t:.3f} s between last frame and lane change "
            f"outside [0, {MAX_EXTRAPOLATION_GAP_S}]"
        )
    return fit.a1 * delta_t + fit.value_at(t_n)


def process_event_gap(
    event: "LaneChangeEvent",
    cam: CameraIntrinsics,
    lane_width_m: float | None = None,
    trailer_length_m: float | None = None,
    thresholds: WarningThresholds | None = None,
) -> GapResult | DiscardedEvent:
    """Estimate the gap at the lane-change time for one event.

    Walks the annotated frames backward from the last frame at or before
    t_lc, accumulating qualified per-frame ranges; the first disqualified
    frame terminates the walk (the fit needs consecutive frames).  Events
    with fewer than MIN_QUALIFIED_FRAMES qualified frames are discarded
    with a typed outcome rather than an exception.
    """
    if event.t_lc is None or not math.isfinite(event.t_lc):
        raise MalformedEventError(f"event {event.event_id} has no lane-change time")
    lane_width_m = event.lane_width if lane_width_m is None else lane_width_m
    trailer_length_m = event.trailer_length if trailer_length_m is None else trailer_length_m
    thresholds = thresholds or WarningThresholds()

    usable = sorted((f for f in event.frames if f.t <= event.t_lc), key=lambda f: f.t)
    if not usable:
        return DiscardedEvent(event.event_id, "no_frames_before_lane_change", 0)

    estimates = []
    for fa in reversed(usable):
        est = estimate_frame_range(fa, cam, lane_width_m, trailer_length_m)
        if not est.qualified:
            break
        estimates.append(est)
    if len(estimates) < MIN_QUALIFIED_FRAMES:
        return DiscardedEvent(event.event_id, "insufficient_frames", len(estimates))

    estimates.reverse()  # chronological order
    times = [e.t for e in estimates]
    ranges = [e.r for e in estimates]
    weights = compute_weights(ranges)
    fit = weighted_line_fit(times, ranges, weights)

    t_n = times[-1]
    r_lc = extrapolate_to_lane_change(fit, t_n, event.t_lc)
    ttc = time_to_collision(r_lc, fit.a1)
    d_req = required_deceleration(r_lc, fit.a1) if r_lc > 0 else 0.0
    warning = warning_decision(event.direction, r_lc, fit.a1, thresholds) if r_lc > 0 else WarningFlags()
    return GapResult(
        event_id=event.event_id,
        direction=event.direction,
        r_lc=r_lc,
        rdot=fit.a1,
        delta_t=event.t_lc - t_n,
        t_n=t_n,
        frames_used=len(estimates),
        ttc=ttc,
        d_req=d_req,
        warning=warning,
    )
