"""Event bundle file formats, the results catalog, and the batch pipeline.

One directory per event:

    <event_id>/
        metadata.json      event header (times, geometry, subset, UTC anchor)
        channels.csv       10 Hz vehicle channels
        frames/
            annotations.json   five points per annotated frame
            *.png              still images (optional)
        radar.csv          optional rearward radar samples

All timestamps inside a bundle are seconds relative to the event start;
metadata carries the single absolute UTC anchor.  Distances are meters,
speeds m/s, angles degrees.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .camera import CameraIntrinsics, PixelPoint
from .conflict import WarningThresholds
from .gap import FrameAnnotation
from .screening import (
    ChannelSeries,
    LaneChangeEvent,
    RampDatabase,
    ScreeningResult,
    screen_event,
    sv_speed_change,
)
from .trajectory import DiscardedEvent, GapResult, process_event_gap

METADATA_FILE = "metadata.json"
CHANNELS_FILE = "channels.csv"
FRAMES_DIR = "frames"
ANNOTATIONS_FILE = "annotations.json"
RADAR_FILE = "radar.csv"

CHANNELS_HEADER = ["t_s", "speed_mps", "heading_deg", "lane_offset_m", "lat_deg", "lon_deg"]
RADAR_HEADER = ["t_s", "range_m"]

RESULTS_COLUMNS = [
    "event_id",
    "direction",
    "subset",
    "outcome",
    "frames_used",
    "R_lc_m",
    "rdot_mps",
    "delta_t_s",
    "ttc_s",
    "d_req_mps2",
    "ttc_warning",
    "d_req_warning",
    "range_warning",
    "sv_speed_change_mps",
]

CATALOG_COLUMNS = [
    "event_id",
    "direction",
    "subset",
    "has_video",
    "has_pov",
    "scenario_label",
    "screening_passes",
    "screening_indeterminate",
    "outcome",
    "R_lc_m",
    "rdot_mps",
]


class BundleValidationError(ValueError):
    """Bundle failed schema validation; violations lists every problem."""

    def __init__(self, path: Path, violations: list[str]):
        self.path = path
        self.violations = violations
        super().__init__(f"invalid event bundle {path}: " + "; ".join(violations))


@dataclass
class EventBundle:
    """One event's data as loaded from disk."""

    event: LaneChangeEvent
    subset: str = "non-ramp"
    radar: Optional[np.ndarray] = None  # (n, 2) columns t_s, range_m
    ground_truth: Optional[dict] = None
    path: Optional[Path] = None

    @property
    def has_video(self) -> bool:
        if self.path is None:
            return False
        frames = self.path / FRAMES_DIR
        return frames.is_dir() and any(
            f.suffix.lower() in (".png", ".jpg", ".jpeg") for f in frames.iterdir()
        )

    @property
    def has_pov(self) -> bool:
        return bool(self.event.frames)


# --- serialization helpers -------------------------------------------------

_event_locks: dict[str, threading.Lock] = {}
_event_locks_guard = threading.Lock()


def event_lock(event_id: str) -> threading.Lock:
    """Per-event exclusive lock serializing concurrent persistence."""
    with _event_locks_guard:
        return _event_locks.setdefault(event_id, threading.Lock())


def atomic_write_text(path: Path, text: str) -> None:
    """Write durably: temp file, fsync, rename into place."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _fmt(value: float) -> str:
    return repr(float(value))


def _canonical_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _annotation_to_obj(fa: FrameAnnotation) -> dict:
    return {
        "t_s": fa.t,
        "image": fa.image_ref,
        "left": [[fa.left[0].u, fa.left[0].v], [fa.left[1].u, fa.left[1].v]],
        "right": [[fa.right[0].u, fa.right[0].v], [fa.right[1].u, fa.right[1].v]],
        "pov": [fa.pov.u, fa.pov.v],
    }


def _annotation_from_obj(obj: dict, violations: list[str]) -> Optional[FrameAnnotation]:
    try:
        for role in ("t_s", "left", "right", "pov"):
            if role not in obj:
                violations.append(f"annotations: missing field {role}")
                return None
        if len(obj["left"]) != 2 or len(obj["right"]) != 2:
            violations.append(f"annotations: markers need two points each at t={obj['t_s']}")
            return None
        return FrameAnnotation(
            t=float(obj["t_s"]),
            left=(PixelPoint(*map(float, obj["left"][0])), PixelPoint(*map(float, obj["left"][1]))),
            right=(PixelPoint(*map(float, obj["right"][0])), PixelPoint(*map(float, obj["right"][1]))),
            pov=PixelPoint(*map(float, obj["pov"])),
            image_ref=str(obj.get("image", "")),
        )
    except (TypeError, ValueError) as exc:
        violations.append(f"annotations: {exc}")
        return None


def load_event_bundle(path: str | Path) -> EventBundle:
    """Load and validate one event directory.

    Raises BundleValidationError carrying the full list of schema
    violations when anything is malformed.
    """
    path = Path(path)
    violations: list[str] = []
    if not path.is_dir():
        raise BundleValidationError(path, ["not a directory"])

    meta_path = path / METADATA_FILE
    if not meta_path.is_file():
        raise BundleValidationError(path, [f"missing {METADATA_FILE}"])
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleValidationError(path, [f"metadata: invalid JSON ({exc})"]) from exc

    required = [
        "event_id",
        "direction",
        "t_lc_s",
        "t_start_s",
        "t_end_s",
        "trailer_length_m",
        "lane_width_m",
        "subset",
        "utc_anchor",
    ]
    for key in required:
        if key not in meta:
            violations.append(f"metadata: missing field {key}")

    utc_anchor = None
    if "utc_anchor" in meta:
        try:
            utc_anchor = datetime.fromisoformat(meta["utc_anchor"])
        except (TypeError, ValueError):
            violations.append("metadata: utc_anchor is not an ISO timestamp")

    channels = None
    ch_path = path / CHANNELS_FILE
    if not ch_path.is_file():
        violations.append(f"missing {CHANNELS_FILE}")
    else:
        try:
            channels = _read_channels(ch_path, utc_anchor)
        except ValueError as exc:
            violations.append(f"channels: {exc}")

    frames: list[FrameAnnotation] = []
    ann_path = path / FRAMES_DIR / ANNOTATIONS_FILE
    if ann_path.is_file():
        try:
            ann_objs = json.loads(ann_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            violations.append(f"annotations: invalid JSON ({exc})")
            ann_objs = []
        for obj in ann_objs:
            fa = _annotation_from_obj(obj, violations)
            if fa is not None:
                frames.append(fa)
        times = [fa.t for fa in frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            violations.append("annotations: frame timestamps must be sorted and unique")

    radar = None
    radar_path = path / RADAR_FILE
    if radar_path.is_file():
        try:
            radar = _read_radar(radar_path)
        except ValueError as exc:
            violations.append(f"radar: {exc}")

    if violations:
        raise BundleValidationError(path, violations)

    try:
        event = LaneChangeEvent(
            event_id=str(meta["event_id"]),
            direction=str(meta["direction"]),
            t_start=float(meta["t_start_s"]),
            t_lc=float(meta["t_lc_s"]),
            t_end=float(meta["t_end_s"]),
            frames=frames,
            trailer_length=float(meta["trailer_length_m"]),
            lane_width=float(meta["lane_width_m"]),
            channels=channels,
            scenario_label=meta.get("scenario_label"),
            marker_pattern=meta.get("marker_pattern"),
        )
    except ValueError as exc:
        raise BundleValidationError(path, [f"metadata: {exc}"]) from exc

    return EventBundle(
        event=event,
        subset=str(meta["subset"]),
        radar=radar,
        ground_truth=meta.get("ground_truth"),
        path=path,
    )


def save_event_bundle(bundle: EventBundle, path: str | Path) -> Path:
    """Write the bundle in canonical form (load/save round trips bytes)."""
    path = Path(path)
    (path / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
    ev = bundle.event
    meta = {
        "event_id": ev.event_id,
        "direction": ev.direction,
        "t_lc_s": ev.t_lc,
        "t_start_s": ev.t_start,
        "t_end_s": ev.t_end,
        "trailer_length_m": ev.trailer_length,
        "lane_width_m": ev.lane_width,
        "subset": bundle.subset,
        "utc_anchor": (
            ev.channels.utc_anchor.isoformat() if ev.channels and ev.channels.utc_anchor else None
        ),
    }
    if ev.scenario_label is not None:
        meta["scenario_label"] = ev.scenario_label
    if ev.marker_pattern is not None:
        meta["marker_pattern"] = ev.marker_pattern
    if bundle.ground_truth is not None:
        meta["ground_truth"] = bundle.ground_truth
    atomic_write_text(path / METADATA_FILE, _canonical_json(meta))

    if ev.channels is not None:
        atomic_write_text(path / CHANNELS_FILE, _channels_csv(ev.channels))
    atomic_write_text(
        path / FRAMES_DIR / ANNOTATIONS_FILE,
        _canonical_json_list([_annotation_to_obj(fa) for fa in ev.frames]),
    )
    if bundle.radar is not None:
        atomic_write_text(path / RADAR_FILE, _radar_csv(bundle.radar))
    return path


def _canonical_json_list(objs: list) -> str:
    return json.dumps(objs, indent=2, sort_keys=True) + "\n"


def _channels_csv(ch: ChannelSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHANNELS_HEADER)
    for i in range(ch.t.size):
        writer.writerow(
            [
                _fmt(ch.t[i]),
                _fmt(ch.speed[i]),
                _fmt(ch.heading[i]),
                _fmt(ch.lane_offset[i]),
                _fmt(ch.lat[i]),
                _fmt(ch.lon[i]),
            ]
        )
    return buf.getvalue()


def _read_channels(path: Path, utc_anchor: Optional[datetime]) -> ChannelSeries:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CHANNELS_HEADER:
            raise ValueError(f"header must be {','.join(CHANNELS_HEADER)}")
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        raise ValueError("no samples")
    arr = np.asarray(rows, dtype=float)
    return ChannelSeries(
        t=arr[:, 0],
        speed=arr[:, 1],
        heading=arr[:, 2],
        lane_offset=arr[:, 3],
        lat=arr[:, 4],
        lon=arr[:, 5],
        utc_anchor=utc_anchor,
    )


def _radar_csv(radar: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RADAR_HEADER)
    for t, r in radar:
        writer.writerow([_fmt(t), _fmt(r)])
    return buf.getvalue()


def _read_radar(path: Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RADAR_HEADER:
            raise ValueError(f"header must be {','.join(RADAR_HEADER)}")
        rows = [[float(cell) for cell in row] for row in reader if row]
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def replace_frame_annotation(bundle_path: str | Path, fa: FrameAnnotation) -> None:
    """Insert or replace the annotation for one frame time, durably.

    Serialized by the per-event lock so concurrent submissions cannot
    interleave partial writes.
    """
    bundle_path = Path(bundle_path)
    ann_path = bundle_path / FRAMES_DIR / ANNOTATIONS_FILE
    with event_lock(bundle_path.name):
        objs = []
        if ann_path.is_file():
            objs = json.loads(ann_path.read_text(encoding="utf-8"))
        objs = [o for o in objs if abs(float(o["t_s"]) - fa.t) > 1e-6]
        objs.append(_annotation_to_obj(fa))
        objs.sort(key=lambda o: o["t_s"])
        ann_path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(ann_path, _canonical_json_list(objs))


# --- pipeline --------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    """One results-CSV row; field order matches RESULTS_COLUMNS."""

    event_id: str
    direction: str
    subset: str
    outcome: str
    frames_used: int = 0
    r_lc_m: Optional[float] = None
    rdot_mps: Optional[float] = None
    delta_t_s: Optional[float] = None
    ttc_s: Optional[float] = None
    d_req_mps2: Optional[float] = None
    ttc_warning: Optional[bool] = None
    d_req_warning: Optional[bool] = None
    range_warning: Optional[bool] = None
    sv_speed_change_mps: Optional[float] = None


@dataclass(frozen=True)
class PipelineResult:
    row: ResultRow
    screening: Optional[ScreeningResult] = None
    gap: Optional[GapResult] = None


def run_pipeline(
    bundle: EventBundle,
    cam: CameraIntrinsics,
    thresholds: Optional[WarningThresholds] = None,
    ramp_db: Optional[RampDatabase] = None,
) -> PipelineResult:
    """Screen, estimate, and assess one event.

    Discarded or indeterminate events yield rows with outcome codes,
    never silent drops.
    """
    ev = bundle.event
    screening = screen_event(ev, ramp_db)
    subset = bundle.subset
    if not screening.indeterminate and ramp_db is not None:
        subset = "ramp" if screening.ramp_region else "non-ramp"

    speed_change = sv_speed_change(ev.channels, ev.t_lc) if ev.channels is not None else None

    def row(outcome: str, gap: Optional[GapResult] = None, frames_used: int = 0) -> ResultRow:
        return ResultRow(
            event_id=ev.event_id,
            direction=ev.direction,
            subset=subset,
            outcome=outcome,
            frames_used=gap.frames_used if gap else frames_used,
            r_lc_m=gap.r_lc if gap else None,
            rdot_mps=gap.rdot if gap else None,
            delta_t_s=gap.delta_t if gap else None,
            ttc_s=gap.ttc if gap else None,
            d_req_mps2=gap.d_req if gap else None,
            ttc_warning=gap.warning.ttc_warning if gap else None,
            d_req_warning=gap.warning.d_req_warning if gap else None,
            range_warning=gap.warning.range_warning if gap else None,
            sv_speed_change_mps=speed_change,
        )

    if screening.indeterminate:
        return PipelineResult(row("screening_indeterminate"), screening)
    if not screening.passes:
        return PipelineResult(row("screened_out"), screening)
    if not ev.frames:
        return PipelineResult(row("no_annotated_frames"), screening)

    gap = process_event_gap(ev, cam, thresholds=thresholds)
    if isinstance(gap, DiscardedEvent):
        return PipelineResult(
            row(f"discarded_{gap.reason}", frames_used=gap.frames_qualified), screening
        )
    return PipelineResult(row("ok", gap=gap), screening, gap)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return _fmt(value)
    return str(value)


def results_csv(rows: Sequence[ResultRow]) -> str:
    """Render result rows in the documented stable column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                _cell(v)
                for v in (
                    r.event_id,
                    r.direction,
                    r.subset,
                    r.outcome,
                    r.frames_used,
                    r.r_lc_m,
                    r.rdot_mps,
                    r.delta_t_s,
                    r.ttc_s,
                    r.d_req_mps2,
                    r.ttc_warning,
                    r.d_req_warning,
                    r.range_warning,
                    r.sv_speed_change_mps,
                )
            ]
        )
    return buf.getvalue()


def catalog_csv(bundles: Sequence[EventBundle], results: Sequence[PipelineResult]) -> str:
    """Event summary table, ordered by event_id."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CATALOG_COLUMNS)
    paired = sorted(zip(bundles, results), key=lambda br: br[0].event.event_id)
    for bundle, res in paired:
        ev = bundle.event
        writer.writerow(
            [
                _cell(v)
                for v in (
                    ev.event_id,
                    ev.direction,
                    res.row.subset,
                    bundle.has_video,
                    bundle.has_pov,
                    ev.scenario_label or "",
                    res.screening.passes if res.screening else None,
                    res.screening.indeterminate if res.screening else None,
                    res.row.outcome,
                    res.row.r_lc_m,
                    res.row.rdot_mps,
                )
            ]
        )
    return buf.getvalue()


def scan_catalog_root(root: str | Path) -> list[Path]:
    """Event bundle directories under root, ordered by event id."""
    root = Path(root)
    return sorted(
        (p for p in root.iterdir() if p.is_dir() and (p / METADATA_FILE).is_file()),
        key=lambda p: p.name,
    )
