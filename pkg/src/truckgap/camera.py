"""Intrinsic camera model: pixel <-> normalized image plane transforms.

The normalized image plane sits at unit distance along the optical axis;
coordinates on it are dimensionless.  The pixel mapping is the affine

    u = fx * x + skew * y + cx
    v = fy * y + cy

applied after the radial-tangential distortion of the normalized point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence


class PixelPoint(NamedTuple):
    """Image coordinates in pixels, origin top-left, u right, v down.

    Points may lie outside the image bounds (extrapolated line points
    are legal).
    """

    u: float
    v: float


class NormalizedPoint(NamedTuple):
    """Point on the normalized image plane (implicit third coordinate 1)."""

    x: float
    y: float


class CameraFramePoint(NamedTuple):
    """Meters in the camera frame: X right, Y down, Z along the optical axis."""

    x: float
    y: float
    z: float


class UndistortConvergenceError(ValueError):
    """Iterative undistortion failed to converge.

    Signals a point outside the distortion model's invertible region.
    """

    def __init__(self, point: NormalizedPoint, residual: float, iterations: int):
        self.point = point
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"undistortion did not converge for {tuple(point)}: "
            f"residual {residual:.3e} after {iterations} iterations"
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with radial(3) + tangential(2) distortion.

    Focal lengths and principal point are in pixels; distortion
    coefficients act on normalized coordinates.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    image_width: int
    image_height: int
    skew: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.image_width and 0 <= self.cy < self.image_height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside image "
                f"{self.image_width}x{self.image_height}"
            )
        for name in ("fx", "fy", "cx", "cy", "skew", "k1", "k2", "k3", "p1", "p2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"camera parameter {name} is not finite")

    @property
    def has_distortion(self) -> bool:
        return any(abs(c) > 0 for c in (self.k1, self.k2, self.k3, self.p1, self.p2))

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        """Build from a config mapping; missing distortion keys default to 0."""
        return cls(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            image_width=int(d["image_width"]),
            image_height=int(d["image_height"]),
            skew=float(d.get("skew", 0.0)),
            k1=float(d.get("k1", 0.0)),
            k2=float(d.get("k2", 0.0)),
            k3=float(d.get("k3", 0.0)),
            p1=float(d.get("p1", 0.0)),
            p2=float(d.get("p2", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "skew": self.skew,
            "k1": self.k1,
            "k2": self.k2,
            "k3": self.k3,
            "p1": self.p1,
            "p2": self.p2,
            "image_width": self.image_width,
            "image_height": self.image_height,
        }


def load_camera_config(path: str | Path) -> CameraIntrinsics:
    """Load a camera configuration JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return CameraIntrinsics.from_dict(json.load(fh))


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite coordinate: {v!r}")


def pixel_to_distorted_normalized(p: PixelPoint, cam: CameraIntrinsics) -> NormalizedPoint:
    """Invert the affine pixel mapping (including skew).

    Returns the distorted normalized coordinates; distortion is still
    present and must be removed with undistort_point.
    """
    _require_finite(p.u, p.v)
    y = (p.v - cam.cy) / cam.fy
    x = (p.u - cam.cx - cam.skew * y) / cam.fx
    return NormalizedPoint(x, y)


def distort_point(p: NormalizedPoint, cam: CameraIntrinsics) -> NormalizedPoint:
    """Apply the radial-tangential distortion model to an ideal point."""
    _require_finite(p.x, p.y)
    x, y = p.x, p.y
    r2 = x * x + y * y
    radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))
    xd = x * radial + 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
    return NormalizedPoint(xd, yd)


_UNDISTORT_MAX_ITER = 50
_UNDISTORT_TOL = 1e-10


def undistort_point(p_d: NormalizedPoint, cam: CameraIntrinsics) -> NormalizedPoint:
    """Invert distort_point by fixed-point iteration.

    Iterates x <- (p_d - tangential(x)) / radial(x) until the forward
    model reproduces p_d within 1e-10 in normalized units.

    Raises:
        UndistortConvergenceError: point outside the invertible region.
    """
    _require_finite(p_d.x, p_d.y)
    if not cam.has_distortion:
        return NormalizedPoint(p_d.x, p_d.y)

    x, y = p_d.x, p_d.y
    for iteration in range(1, _UNDISTORT_MAX_ITER + 1):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))
        tan_x = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
        tan_y = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
        if radial <= 0 or not (math.isfinite(radial) and math.isfinite(tan_x)):
            raise UndistortConvergenceError(p_d, float("inf"), iteration)
        x = (p_d.x - tan_x) / radial
        y = (p_d.y - tan_y) / radial
        fwd = distort_point(NormalizedPoint(x, y), cam)
        residual = math.hypot(fwd.x - p_d.x, fwd.y - p_d.y)
        if residual <= _UNDISTORT_TOL:
            return NormalizedPoint(x, y)
    raise UndistortConvergenceError(p_d, residual, _UNDISTORT_MAX_ITER)


def normalized_to_pixel(p_n: NormalizedPoint, cam: CameraIntrinsics) -> PixelPoint:
    """Project an ideal normalized point to pixels: distort, then apply K."""
    d = distort_point(p_n, cam)
    u = cam.fx * d.x + cam.skew * d.y + cam.cx
    v = cam.fy * d.y + cam.cy
    return PixelPoint(u, v)


def reprojection_rmse(
    observed: Sequence[PixelPoint], predicted: Sequence[PixelPoint]
) -> float:
    """Root mean squared Euclidean pixel residual between two point sets."""
    if len(observed) != len(predicted):
        raise ValueError(f"length mismatch: {len(observed)} vs {len(predicted)}")
    if not observed:
        raise ValueError("empty point sequences")
    acc = 0.0
    for o, p in zip(observed, predicted):
        du = o.u - p.u
        dv = o.v - p.v
        acc += du * du + dv * dv
    return math.sqrt(acc / len(observed))
