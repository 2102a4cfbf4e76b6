"""Lane-change boundary detection and event screening.

Works on 10 Hz vehicle channel series.  The lane tracker re-anchors to
the new lane as the vehicle body crosses the marker, producing a jump in
the lane-offset channel; that jump defines the lane-change time.  Events
are then screened for highway speed, straight road, and daytime, and
routed to the ramp subset when the trajectory passes near a ramp gore.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .gap import FrameAnnotation

log = logging.getLogger(__name__)

HIGHWAY_MIN_SPEED_MPS = 24.6  # 55 mph
MAX_HEADING_SPAN_DEG = 5.0
DAYTIME_MAX_ZENITH_DEG = 96.0  # civil dusk
RAMP_RADIUS_M = 500.0
EARTH_RADIUS_M = 6371_000.0

# Boundary definition: vehicle center within this distance of a lane
# center marks the start/end of the maneuver.
BOUNDARY_OFFSET_M = 0.1
BOUNDARY_SEARCH_WINDOW_S = 10.0

# A lane-offset jump larger than half the local lane width flags the
# tracker re-anchor; the hysteresis keeps noise around the threshold
# from re-triggering.
JUMP_HYSTERESIS_M = 0.3

MAX_CHANNEL_GAP_S = 0.5


@dataclass
class ChannelSeries:
    """Aligned 10 Hz vehicle channels; t is event-relative seconds.

    utc_anchor is the absolute UTC time of t = 0 and is needed for the
    daytime test.
    """

    t: np.ndarray
    speed: np.ndarray
    heading: np.ndarray
    lane_offset: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    utc_anchor: Optional[datetime] = None

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        for name in ("speed", "heading", "lane_offset", "lat", "lon"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            if arr.shape != self.t.shape:
                raise ValueError(f"channel {name} length {arr.size} != t length {self.t.size}")
        if self.t.size >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("channel times must be strictly increasing")

    def utc_at(self, t: float) -> datetime:
        if self.utc_anchor is None:
            raise ValueError("channel series has no UTC anchor")
        return self.utc_anchor + timedelta(seconds=float(t))

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.t - t)))


@dataclass(frozen=True)
class ScreeningResult:
    """Outcome of the screening cascade.

    ramp_region routes the event to the ramp subset; it does not fail
    the event.  indeterminate marks events whose channels had gaps too
    large to evaluate.
    """

    highway: bool
    straight: bool
    daytime: bool
    ramp_region: bool
    indeterminate: bool = False

    @property
    def passes(self) -> bool:
        return self.highway and self.straight and self.daytime


@dataclass(frozen=True)
class RampDatabase:
    """Ramp/through-lane gore points as (lat, lon) decimal degrees."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        for lat, lon in self.points:
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise ValueError(f"invalid coordinates ({lat}, {lon})")

    @classmethod
    def from_file(cls, path: str | Path) -> "RampDatabase":
        """One record per line: lat,lon in decimal degrees."""
        pts = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                lat_s, lon_s = line.split(",")
                pts.append((float(lat_s), float(lon_s)))
        return cls(points=tuple(pts))


@dataclass
class LaneChangeEvent:
    """One lane-change maneuver: the unit of analysis."""

    event_id: str
    direction: str  # "left" | "right"
    t_start: float
    t_lc: float
    t_end: float
    frames: list[FrameAnnotation] = field(default_factory=list)
    trailer_length: float = 0.0
    lane_width: float = 3.6
    channels: Optional[ChannelSeries] = None
    scenario_label: Optional[str] = None
    marker_pattern: Optional[str] = None
    screening: Optional[ScreeningResult] = None

    def __post_init__(self) -> None:
        if self.direction not in ("left", "right"):
            raise ValueError(f"direction must be left or right, got {self.direction!r}")
        if not (self.t_start < self.t_lc < self.t_end):
            raise ValueError(
                f"event times must satisfy t_start < t_lc < t_end, got "
                f"{self.t_start}, {self.t_lc}, {self.t_end}"
            )


@dataclass(frozen=True)
class LaneChangeBounds:
    t_start: float
    t_lc: float
    t_end: float
    direction: str


def detect_lane_change(
    ch: ChannelSeries, lane_width_series: float | Sequence[float]
) -> list[LaneChangeBounds]:
    """Find lane-change maneuvers in the lane-offset channel.

    The lane-change time is the sample where the offset jumps by more
    than half the local lane width (the tracker re-anchoring to the new
    lane).  Lane offset is signed positive toward the left, so the
    re-anchor jump is negative for a left lane change.  Boundaries are
    the last/first times the offset is within BOUNDARY_OFFSET_M of the
    original/new lane center; candidates without both boundaries within
    BOUNDARY_SEARCH_WINDOW_S are partial maneuvers and are dropped.
    """
    t = ch.t
    offset = ch.lane_offset
    widths = np.broadcast_to(np.asarray(lane_width_series, dtype=float), t.shape)
    events: list[LaneChangeBounds] = []
    if t.size < 2:
        return events

    armed = True
    for i in range(1, t.size):
        d = offset[i] - offset[i - 1]
        threshold = widths[i] / 2.0
        if not armed:
            if abs(d) < threshold - JUMP_HYSTERESIS_M:
                armed = True
            continue
        if abs(d) <= threshold:
            continue
        armed = False

        t_lc = t[i]
        direction = "left" if d < 0 else "right"
        t_start = None
        for j in range(i - 1, -1, -1):
            if t_lc - t[j] > BOUNDARY_SEARCH_WINDOW_S:
                break
            if abs(offset[j]) <= BOUNDARY_OFFSET_M:
                t_start = t[j]
                break
        t_end = None
        for j in range(i, t.size):
            if t[j] - t_lc > BOUNDARY_SEARCH_WINDOW_S:
                break
            if abs(offset[j]) <= BOUNDARY_OFFSET_M:
                t_end = t[j]
                break
        if t_start is None or t_end is None:
            log.debug("partial maneuver at t=%.2f rejected", t_lc)
            continue
        events.append(LaneChangeBounds(float(t_start), float(t_lc), float(t_end), direction))
    return events


def solar_zenith(lat_deg: float, lon_deg: float, utc: datetime) -> float:
    """Solar zenith angle in degrees from a low-precision ephemeris.

    Fractional-year declination and equation-of-time series; good to a
    few tenths of a degree, plenty for a 96-degree dusk test.
    Longitude is positive east.
    """
    if utc.tzinfo is not None:
        utc = utc.astimezone(timezone.utc).replace(tzinfo=None)
    doy = utc.timetuple().tm_yday
    hours = utc.hour + utc.minute / 60.0 + utc.second / 3600.0 + utc.microsecond / 3.6e9
    # fractional year, radians
    gamma = 2.0 * math.pi / 365.0 * (doy - 1 + (hours - 12.0) / 24.0)

    # solar declination (radians)
    decl = (
        0.006918
        - 0.399912 * math.cos(gamma)
        + 0.070257 * math.sin(gamma)
        - 0.006758 * math.cos(2 * gamma)
        + 0.000907 * math.sin(2 * gamma)
        - 0.002697 * math.cos(3 * gamma)
        + 0.00148 * math.sin(3 * gamma)
    )
    # equation of time (minutes)
    eqtime = 229.18 * (
        0.000075
        + 0.001868 * math.cos(gamma)
        - 0.032077 * math.sin(gamma)
        - 0.014615 * math.cos(2 * gamma)
        - 0.040849 * math.sin(2 * gamma)
    )

    true_solar_min = hours * 60.0 + eqtime + 4.0 * lon_deg
    hour_angle = math.radians(true_solar_min / 4.0 - 180.0)
    lat = math.radians(lat_deg)
    cos_zenith = math.sin(lat) * math.sin(decl) + math.cos(lat) * math.cos(decl) * math.cos(
        hour_angle
    )
    return math.degrees(math.acos(max(-1.0, min(1.0, cos_zenith))))


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a sphere of radius 6371 km."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlambda = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlambda / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def ramp_proximity(
    track: Sequence[tuple[float, float]], db: Optional[RampDatabase]
) -> bool:
    """True iff any track point is within RAMP_RADIUS_M of a ramp point."""
    if not track:
        raise ValueError("empty track")
    if db is None or not db.points:
        log.info("no ramp database; treating trajectory as non-ramp")
        return False
    for lat, lon in track:
        for rlat, rlon in db.points:
            if haversine_m(lat, lon, rlat, rlon) <= RAMP_RADIUS_M:
                return True
    return False


def _window_has_gap(t: np.ndarray, t_from: float, t_to: float) -> bool:
    if t.size == 0 or t[0] > t_from or t[-1] < t_to:
        return True
    mask = (t >= t_from) & (t <= t_to)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return True
    lo = max(idx[0] - 1, 0)
    hi = min(idx[-1] + 1, t.size - 1)
    return bool(np.max(np.diff(t[lo : hi + 1])) > MAX_CHANNEL_GAP_S)


def screen_event(ev: LaneChangeEvent, db: Optional[RampDatabase] = None) -> ScreeningResult:
    """Apply the screening cascade over the event window.

    highway: minimum speed over [t_start, t_end] at or above 24.6 m/s.
    straight: unwrapped heading span over the window within 5 degrees.
    daytime: solar zenith at t_lc at most 96 degrees.
    A channel gap over 0.5 s inside the window makes the result
    indeterminate (all criterion flags cleared).
    """
    ch = ev.channels
    if ch is None or ch.t.size == 0 or _window_has_gap(ch.t, ev.t_start, ev.t_end):
        return ScreeningResult(False, False, False, False, indeterminate=True)

    mask = (ch.t >= ev.t_start) & (ch.t <= ev.t_end)
    highway = bool(np.min(ch.speed[mask]) >= HIGHWAY_MIN_SPEED_MPS)

    heading_unwrapped = np.degrees(np.unwrap(np.radians(ch.heading[mask])))
    straight = bool(np.ptp(heading_unwrapped) <= MAX_HEADING_SPAN_DEG)

    i_lc = ch.nearest_index(ev.t_lc)
    if ch.utc_anchor is None:
        return ScreeningResult(False, False, False, False, indeterminate=True)
    zenith = solar_zenith(ch.lat[i_lc], ch.lon[i_lc], ch.utc_at(ev.t_lc))
    daytime = zenith <= DAYTIME_MAX_ZENITH_DEG

    track_mask = (ch.t >= ev.t_start - 2.0) & (ch.t <= ev.t_end + 5.0)
    track = list(zip(ch.lat[track_mask], ch.lon[track_mask]))
    ramp = ramp_proximity(track, db) if track else False

    return ScreeningResult(highway=highway, straight=straight, daytime=daytime, ramp_region=ramp)


def sv_speed_change(ch: ChannelSeries, t_lc: float, window_s: float = 5.0) -> Optional[float]:
    """Speed change of the subject vehicle over the window before t_lc.

    Nearest-sample lookup at both endpoints; None when the speed channel
    does not cover the window.
    """
    if ch.t.size == 0 or ch.t[0] > t_lc - window_s or ch.t[-1] < t_lc:
        return None
    i0 = ch.nearest_index(t_lc - window_s)
    i1 = ch.nearest_index(t_lc)
    return float(ch.speed[i1] - ch.speed[i0])
