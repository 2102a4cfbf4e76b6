"""Per-frame range estimation from five annotated pixel points.

The two lane markers of the target lane are straight lines on the
normalized image plane; their horizontal separation at the row of the
vehicle's ground contact point, together with the metric lane width,
gives the camera-to-vehicle distance by similar triangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import (
    CameraIntrinsics,
    NormalizedPoint,
    PixelPoint,
    UndistortConvergenceError,
    normalized_to_pixel,
    pixel_to_distorted_normalized,
    undistort_point,
)

# Frames yielding ranges outside this band are disqualified: beyond the
# far bound a vehicle subtends too few pixels to annotate meaningfully.
RANGE_PLAUSIBLE_MAX_M = 120.0

_MIN_POINT_SEPARATION = 1e-9
_MIN_LANE_WIDTH = 1e-6


class DegenerateAnnotationError(ValueError):
    """Marker annotation points coincide; no line can be fitted."""


class GeometryError(ValueError):
    """Marker/row geometry is inconsistent (crossed, parallel, or swapped)."""


@dataclass(frozen=True)
class FrameAnnotation:
    """One rear-view frame's five annotated pixel points.

    t is event-relative seconds.  Each marker carries two points; pov is
    the bottom edge of the shadow under the vehicle in the target lane.
    """

    t: float
    left: tuple[PixelPoint, PixelPoint]
    right: tuple[PixelPoint, PixelPoint]
    pov: PixelPoint
    image_ref: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError("frame time must be finite")
        for name, (a, b) in (("left", self.left), ("right", self.right)):
            if math.hypot(a.u - b.u, a.v - b.v) <= _MIN_POINT_SEPARATION:
                raise DegenerateAnnotationError(f"{name} marker points coincide: {a}")


@dataclass(frozen=True)
class Line2D:
    """Line on the normalized plane: a point and a unit direction."""

    point: NormalizedPoint
    direction: tuple[float, float]

    def x_at(self, y: float) -> float:
        """Horizontal coordinate where the line crosses the row y."""
        dx, dy = self.direction
        if abs(dy) < 1e-12:
            raise GeometryError(f"line parallel to row y={y}")
        return self.point.x + (y - self.point.y) * dx / dy


@dataclass(frozen=True)
class RangeEstimate:
    """Range recovered from a single frame.

    w is the normalized-plane lane width at the vehicle row, z_c the
    camera-to-vehicle distance, and r the rear-of-trailer distance.
    Unqualified frames carry NaN where geometry failed.
    """

    t: float
    w: float
    z_c: float
    r: float
    qualified: bool


def fit_marker_line(a: NormalizedPoint, b: NormalizedPoint) -> Line2D:
    """Line through two undistorted marker points."""
    dx = b.x - a.x
    dy = b.y - a.y
    norm = math.hypot(dx, dy)
    if norm <= _MIN_POINT_SEPARATION:
        raise DegenerateAnnotationError(f"coincident marker points: {tuple(a)}")
    return Line2D(point=a, direction=(dx / norm, dy / norm))


def lane_width_at_pov(left: Line2D, right: Line2D, pov_y: float) -> float:
    """Horizontal separation of the marker lines at the row y = pov_y."""
    x_left = left.x_at(pov_y)
    x_right = right.x_at(pov_y)
    w = x_right - x_left
    if w <= _MIN_LANE_WIDTH:
        raise GeometryError(
            f"non-positive lane width {w:.3e} at row {pov_y}: crossed or mislabeled markers"
        )
    return w


def range_from_width(lane_width_m: float, w: float, trailer_length_m: float) -> tuple[float, float]:
    """Similar-triangles range: Z_C = W / w, R = Z_C - L.

    R may come out non-positive (vehicle overlapping the trailer
    footprint); callers decide qualification.
    """
    if lane_width_m <= 0:
        raise ValueError(f"lane width must be positive, got {lane_width_m}")
    if trailer_length_m < 0:
        raise ValueError(f"trailer length must be non-negative, got {trailer_length_m}")
    if w <= 0:
        raise GeometryError(f"non-positive image lane width {w}")
    z_c = lane_width_m / w
    return z_c, z_c - trailer_length_m


def _undistorted(p: PixelPoint, cam: CameraIntrinsics) -> NormalizedPoint:
    return undistort_point(pixel_to_distorted_normalized(p, cam), cam)


def estimate_frame_range(
    fa: FrameAnnotation,
    cam: CameraIntrinsics,
    lane_width_m: float,
    trailer_length_m: float,
) -> RangeEstimate:
    """Full single-frame pipeline: undistort, fit lines, measure, range.

    Geometry failures and implausible ranges disqualify the frame rather
    than raising, so one bad frame never aborts an event.
    """
    if lane_width_m <= 0:
        raise ValueError(f"lane width must be positive, got {lane_width_m}")
    try:
        left_n = [_undistorted(p, cam) for p in fa.left]
        right_n = [_undistorted(p, cam) for p in fa.right]
        pov_n = _undistorted(fa.pov, cam)
        left_line = fit_marker_line(left_n[0], left_n[1])
        right_line = fit_marker_line(right_n[0], right_n[1])
        w = lane_width_at_pov(left_line, right_line, pov_n.y)
        z_c, r = range_from_width(lane_width_m, w, trailer_length_m)
    except (GeometryError, DegenerateAnnotationError, UndistortConvergenceError):
        return RangeEstimate(t=fa.t, w=math.nan, z_c=math.nan, r=math.nan, qualified=False)
    qualified = 0.0 < r <= RANGE_PLAUSIBLE_MAX_M
    return RangeEstimate(t=fa.t, w=w, z_c=z_c, r=r, qualified=qualified)


@dataclass(frozen=True)
class OverlaySegments:
    """Reprojected validation overlay in pixel coordinates."""

    left: list[PixelPoint]
    right: list[PixelPoint]
    width_segment: tuple[PixelPoint, PixelPoint]


def overlay_segments(
    fa: FrameAnnotation, cam: CameraIntrinsics, samples_per_line: int = 33
) -> OverlaySegments:
    """Reproject the fitted marker lines and the width segment to pixels.

    Marker polylines are sampled on the normalized plane over the row
    span covering the annotated points and the vehicle row, so the
    annotated points themselves are polyline vertices.
    """
    left_n = [_undistorted(p, cam) for p in fa.left]
    right_n = [_undistorted(p, cam) for p in fa.right]
    pov_n = _undistorted(fa.pov, cam)
    left_line = fit_marker_line(left_n[0], left_n[1])
    right_line = fit_marker_line(right_n[0], right_n[1])
    w = lane_width_at_pov(left_line, right_line, pov_n.y)

    def polyline(line: Line2D, anchors: list[NormalizedPoint]) -> list[PixelPoint]:
        ys = {p.y for p in anchors}
        ys.add(pov_n.y)
        lo, hi = min(ys), max(ys)
        span = hi - lo
        stations = sorted(ys.union(np.linspace(lo, hi, samples_per_line).tolist())) if span > 0 else sorted(ys)
        return [normalized_to_pixel(NormalizedPoint(line.x_at(y), y), cam) for y in stations]

    seg_left = normalized_to_pixel(NormalizedPoint(left_line.x_at(pov_n.y), pov_n.y), cam)
    seg_right = normalized_to_pixel(NormalizedPoint(left_line.x_at(pov_n.y) + w, pov_n.y), cam)
    return OverlaySegments(
        left=polyline(left_line, left_n),
        right=polyline(right_line, right_n),
        width_segment=(seg_left, seg_right),
    )


def median_lane_width(
    times_s: Sequence[float],
    widths_m: Sequence[float],
    t_lc: float,
    window_s: float = 5.0,
) -> float:
    """Median of a lane-width series over the window preceding t_lc.

    Robust against single-sample tracker glitches; used when building
    event metadata from a lane-tracker width channel.
    """
    t = np.asarray(times_s, dtype=float)
    w = np.asarray(widths_m, dtype=float)
    mask = (t >= t_lc - window_s) & (t <= t_lc)
    if not mask.any():
        raise ValueError(f"no lane-width samples in [{t_lc - window_s}, {t_lc}]")
    return float(np.median(w[mask]))
