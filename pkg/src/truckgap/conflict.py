"""Conflict metrics for a closing pair: time-to-collision and the
constant deceleration the following vehicle needs to avoid contact."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

# Below this closing rate no closure is projected and TTC is undefined.
RDOT_EPSILON = 1e-9


@dataclass(frozen=True)
class WarningThresholds:
    """Suggested warning-decision thresholds (all overridable)."""

    ttc_max_s: float = 4.0
    d_req_min_mps2: float = 0.8
    right_range_min_m: float = 12.7

    def __post_init__(self) -> None:
        if min(self.ttc_max_s, self.d_req_min_mps2, self.right_range_min_m) <= 0:
            raise ValueError("thresholds must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> "WarningThresholds":
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(
            ttc_max_s=float(d.get("ttc_max_s", cls.ttc_max_s)),
            d_req_min_mps2=float(d.get("d_req_min_mps2", cls.d_req_min_mps2)),
            right_range_min_m=float(d.get("right_range_min_m", cls.right_range_min_m)),
        )


@dataclass(frozen=True)
class WarningFlags:
    ttc_warning: bool = False
    d_req_warning: bool = False
    range_warning: bool = False

    @property
    def any(self) -> bool:
        return self.ttc_warning or self.d_req_warning or self.range_warning


@dataclass(frozen=True)
class ConflictAssessment:
    """TTC (None when no closure is projected), required deceleration,
    and whether the pair is closing."""

    ttc: Optional[float]
    d_req: float
    closing: bool


def time_to_collision(r: float, rdot: float) -> Optional[float]:
    """TTC = -R / Rdot; None when |Rdot| is below the closure epsilon.

    Negative TTC means the vehicles are separating: no collision is
    projected even with no driver action.
    """
    if abs(rdot) < RDOT_EPSILON:
        return None
    return -r / rdot


def required_deceleration(r: float, rdot: float) -> float:
    """D_req = Rdot^2 / (2R) for closing pairs; exactly 0 otherwise.

    The metric assumes the lead vehicle holds speed and the follower
    avoids contact by braking alone, so it is only defined for a
    closing range.
    """
    if r <= 0:
        raise ValueError(f"range must be positive, got {r}")
    if rdot >= 0:
        return 0.0
    return rdot * rdot / (2.0 * r)


def assess_conflict(r: float, rdot: float) -> ConflictAssessment:
    return ConflictAssessment(
        ttc=time_to_collision(r, rdot),
        d_req=required_deceleration(r, rdot),
        closing=rdot < 0,
    )


def warning_decision(
    direction: str, r: float, rdot: float, th: WarningThresholds | None = None
) -> WarningFlags:
    """Evaluate the three warning conditions independently.

    ttc_warning: TTC defined, positive, and under the TTC threshold.
    d_req_warning: required deceleration above its threshold.
    range_warning: right-direction changes with the range under the
    10th-percentile floor.  Policy composition is left to the caller.
    """
    if r <= 0:
        raise ValueError(f"range must be positive, got {r}")
    th = th or WarningThresholds()
    ttc = time_to_collision(r, rdot)
    d_req = required_deceleration(r, rdot)
    return WarningFlags(
        ttc_warning=ttc is not None and 0 < ttc < th.ttc_max_s,
        d_req_warning=d_req > th.d_req_min_mps2,
        range_warning=direction == "right" and r < th.right_range_min_m,
    )
