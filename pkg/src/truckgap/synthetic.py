"""Ground-truth scene generator and sensitivity laboratory.

Projects known 3D lane/vehicle geometry through the full camera model to
fabricate annotated frames and whole events with known range kinematics.
Every numeric claim of the estimation pipeline is testable against these
scenes.  The vertical-coordinate (splay) ranging method lives here too,
solely to quantify its pitch sensitivity against the lane-width method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Optional

import numpy as np

from .camera import CameraIntrinsics, NormalizedPoint, PixelPoint, distort_point, pixel_to_distorted_normalized, undistort_point
from .gap import FrameAnnotation, estimate_frame_range
from .screening import ChannelSeries, LaneChangeEvent

# World frame: X right, Y down (road plane at Y = 0, camera above it at
# Y = -h), Z rearward along the lane centerline.

DEFAULT_CAMERA_HEIGHT_M = 2.3
MIN_PROJECTION_DEPTH_M = 0.1


class ProjectionError(ValueError):
    """Point does not project (at or behind the camera plane)."""


class UndefinedRangeError(ValueError):
    """Splay ray does not intersect the road ahead (at/above horizon)."""


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


@dataclass(frozen=True)
class CameraPose:
    """Camera-from-world transform plus the angle parameterization.

    rotation maps world direction vectors into the camera frame;
    p_cam = rotation @ p_world + translation.  Positive pitch tips the
    view up (ground features move down in the image), positive yaw turns
    it right, positive roll rotates the image clockwise.
    """

    rotation: np.ndarray
    translation: np.ndarray
    height: float
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0

    def __post_init__(self) -> None:
        if self.height <= 0:
            raise ValueError(f"camera height must be positive, got {self.height}")
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3) or np.abs(r @ r.T - np.eye(3)).max() > 1e-12:
            raise ValueError("rotation must be a 3x3 orthonormal matrix")

    @classmethod
    def from_angles(
        cls,
        height: float = DEFAULT_CAMERA_HEIGHT_M,
        pitch_deg: float = 0.0,
        roll_deg: float = 0.0,
        yaw_deg: float = 0.0,
    ) -> "CameraPose":
        rot = (
            _rot_z(math.radians(roll_deg))
            @ _rot_x(-math.radians(pitch_deg))
            @ _rot_y(math.radians(yaw_deg))
        )
        center = np.array([0.0, -height, 0.0])
        return cls(
            rotation=rot,
            translation=-rot @ center,
            height=height,
            pitch=pitch_deg,
            roll=roll_deg,
            yaw=yaw_deg,
        )


def project_scene_point(
    p_world: tuple[float, float, float] | np.ndarray,
    pose: CameraPose,
    cam: CameraIntrinsics,
) -> PixelPoint:
    """World point -> camera frame -> perspective divide -> distort -> pixels."""
    p_c = pose.rotation @ np.asarray(p_world, dtype=float) + pose.translation
    if p_c[2] <= MIN_PROJECTION_DEPTH_M:
        raise ProjectionError(f"point {tuple(p_world)} projects behind the camera (Z={p_c[2]:.3f})")
    n = NormalizedPoint(p_c[0] / p_c[2], p_c[1] / p_c[2])
    d = distort_point(n, cam)
    return PixelPoint(cam.fx * d.x + cam.skew * d.y + cam.cx, cam.fy * d.y + cam.cy)


def make_default_camera(
    k1: float = -0.3, k2: float = 0.1, p1: float = 0.0005, p2: float = -0.0005
) -> CameraIntrinsics:
    """Distortion-enabled camera used by fixtures and the simulator."""
    return CameraIntrinsics(
        fx=1000.0,
        fy=1000.0,
        cx=320.0,
        cy=240.0,
        image_width=640,
        image_height=480,
        k1=k1,
        k2=k2,
        p1=p1,
        p2=p2,
    )


@dataclass(frozen=True)
class SyntheticScene:
    """Ground-truth lane/vehicle geometry for one synthesized frame.

    pov_distance is camera-to-vehicle (Z); the recoverable range truth
    is pov_distance - trailer_length.  marker_stations are the
    longitudinal positions of the two annotated points per marker;
    None brackets the vehicle at Z -/+ 5 m so the width measurement
    interpolates rather than extrapolates.
    """

    lane_width: float = 3.6
    pov_distance: float = 30.0
    trailer_length: float = 0.0
    pose: CameraPose = field(default_factory=CameraPose.from_angles)
    cam: CameraIntrinsics = field(default_factory=make_default_camera)
    pixel_noise_sigma: float = 0.0
    rng_seed: int = 0
    marker_stations: Optional[tuple[float, float]] = None
    pov_lateral: float = 0.0

    def __post_init__(self) -> None:
        if self.lane_width <= 0:
            raise ValueError("lane width must be positive")
        if self.trailer_length < 0:
            raise ValueError("trailer length must be non-negative")
        if self.pov_distance <= self.trailer_length:
            raise ValueError("vehicle must be beyond the trailer rear")

    def stations(self) -> tuple[float, float]:
        if self.marker_stations is not None:
            return self.marker_stations
        return (self.pov_distance - 5.0, self.pov_distance + 5.0)


def _frame_rng(seed: int, t: float) -> np.random.Generator:
    # deterministic split: one child stream per (seed, millisecond frame time)
    return np.random.default_rng((int(seed), int(round(t * 1000.0))))


def synthesize_frame(scene: SyntheticScene, t: float = 0.0) -> tuple[FrameAnnotation, float]:
    """Project markers and vehicle point, add pixel noise, return truth R.

    Bit-identical output for identical (scene, t): the noise stream is
    derived from the scene seed and the frame time.
    """
    half = scene.lane_width / 2.0
    s0, s1 = scene.stations()
    world_points = [
        (-half, 0.0, s0),
        (-half, 0.0, s1),
        (half, 0.0, s0),
        (half, 0.0, s1),
        (scene.pov_lateral, 0.0, scene.pov_distance),
    ]
    pixels = [project_scene_point(p, scene.pose, scene.cam) for p in world_points]
    if scene.pixel_noise_sigma > 0:
        noise = _frame_rng(scene.rng_seed, t).normal(0.0, scene.pixel_noise_sigma, size=(5, 2))
        pixels = [PixelPoint(p.u + n[0], p.v + n[1]) for p, n in zip(pixels, noise)]
    fa = FrameAnnotation(
        t=t,
        left=(pixels[0], pixels[1]),
        right=(pixels[2], pixels[3]),
        pov=pixels[4],
        image_ref=f"synthetic_{t:.3f}",
    )
    return fa, scene.pov_distance - scene.trailer_length


def synthesize_event(
    event_id: str,
    r0: float,
    rdot: float,
    n_frames: int,
    scene: SyntheticScene,
    frame_rate_hz: float = 2.0,
    t_lc_offset: float = 0.4,
    direction: str = "left",
) -> LaneChangeEvent:
    """Event with linear range kinematics R(t) = r0 + rdot * t.

    Frames are spaced at the capture rate starting at t = 0; the
    lane-change time falls t_lc_offset after the last frame (within one
    capture interval).
    """
    if n_frames < 1:
        raise ValueError("need at least one frame")
    dt = 1.0 / frame_rate_hz
    if not (0.0 <= t_lc_offset < dt):
        raise ValueError(f"t_lc_offset must be in [0, {dt})")
    frames = []
    for k in range(n_frames):
        t = k * dt
        r = r0 + rdot * t
        if r <= 0:
            raise ValueError(f"range {r:.2f} m non-positive at frame {k}")
        frame_scene = replace(scene, pov_distance=r + scene.trailer_length)
        fa, _ = synthesize_frame(frame_scene, t)
        frames.append(fa)
    t_n = (n_frames - 1) * dt
    t_lc = t_n + t_lc_offset
    return LaneChangeEvent(
        event_id=event_id,
        direction=direction,
        t_start=-0.5,
        t_lc=t_lc,
        t_end=t_lc + 2.0,
        frames=frames,
        trailer_length=scene.trailer_length,
        lane_width=scene.lane_width,
    )


def synthesize_channels(
    t_lc: float,
    direction: str = "left",
    t_from: float = -10.0,
    t_to: float = 10.0,
    speed_mps: float = 27.0,
    heading_deg: float = 90.0,
    heading_drift_deg: float = 1.0,
    lane_width: float = 3.6,
    lat0: float = 42.3,
    lon0: float = -83.7,
    utc_anchor: Optional[datetime] = None,
    dt: float = 0.1,
) -> ChannelSeries:
    """Fabricate a 10 Hz channel series containing one lane change.

    The lane-offset trace ramps toward the boundary, re-anchors to the
    new lane at the first sample at or after t_lc, and settles on the
    new center.  Offsets are signed positive toward the left.
    """
    t = np.arange(t_from, t_to + dt / 2, dt)
    sign = 1.0 if direction == "left" else -1.0
    depart = abs(0.95 * lane_width / 2.0)
    t_ramp_start = t_lc - 3.0
    t_settle = t_lc + 3.0
    offset = np.zeros_like(t)
    for i, ti in enumerate(t):
        if ti < t_ramp_start:
            offset[i] = 0.0
        elif ti < t_lc:
            offset[i] = sign * depart * (ti - t_ramp_start) / (t_lc - t_ramp_start)
        elif ti < t_settle:
            start = sign * (depart - lane_width)
            offset[i] = start * (1.0 - (ti - t_lc) / (t_settle - t_lc))
        else:
            offset[i] = 0.0

    speed = np.full_like(t, speed_mps)
    heading = heading_deg + heading_drift_deg * (t - t[0]) / (t[-1] - t[0])
    # vehicle driving due north at constant speed
    lat = lat0 + speed_mps * (t - t[0]) / 111_195.0
    lon = np.full_like(t, lon0)
    return ChannelSeries(
        t=t,
        speed=speed,
        heading=heading,
        lane_offset=offset,
        lat=lat,
        lon=lon,
        utc_anchor=utc_anchor or datetime(2010, 6, 15, 16, 0, 0),
    )


def splay_range(y_pov: float, height: float, pitch_error_deg: float = 0.0) -> float:
    """Range from the vertical image coordinate and camera height.

    Z = h / tan(atan(y) + pitch_error).  Kept only to quantify how a
    small pitch disturbance corrupts this method; production ranging
    uses the lane width instead.
    """
    if height <= 0:
        raise ValueError("camera height must be positive")
    angle = math.atan(y_pov) + math.radians(pitch_error_deg)
    if angle <= 0 or angle >= math.pi / 2:
        raise UndefinedRangeError(
            f"ray at {math.degrees(angle):.2f} deg does not meet the road"
        )
    return height / math.tan(angle)


def pitch_sensitivity_experiment(
    scene: SyntheticScene, pitch_error_deg: float
) -> tuple[float, float]:
    """Relative range error of both methods under a pitch disturbance.

    The camera pose is perturbed before projection; both estimators then
    assume the unperturbed mounting.  Returns signed relative errors
    (splay, lane-width) against the true camera-to-vehicle distance.
    """
    pose = scene.pose
    perturbed = CameraPose.from_angles(
        height=pose.height,
        pitch_deg=pose.pitch + pitch_error_deg,
        roll_deg=pose.roll,
        yaw_deg=pose.yaw,
    )
    noiseless = replace(scene, pose=perturbed, pixel_noise_sigma=0.0)
    fa, _ = synthesize_frame(noiseless, t=0.0)

    est = estimate_frame_range(fa, scene.cam, scene.lane_width, scene.trailer_length)
    lane_rel_err = (est.z_c - scene.pov_distance) / scene.pov_distance

    pov_n = undistort_point(pixel_to_distorted_normalized(fa.pov, scene.cam), scene.cam)
    z_splay = splay_range(pov_n.y, pose.height, pitch_error_deg=0.0)
    splay_rel_err = (z_splay - scene.pov_distance) / scene.pov_distance
    return splay_rel_err, lane_rel_err
