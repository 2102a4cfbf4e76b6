"""HTTP service feeding the annotation frontend.

Every numeric value returned by an endpoint is produced by the same
library calls a batch run would make; the service adds only persistence
and transport.  Point submissions are durably written before the
response returns.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .camera import CameraIntrinsics, PixelPoint
from .conflict import WarningThresholds
from .gap import FrameAnnotation, estimate_frame_range, overlay_segments
from .store import FRAMES_DIR, load_event_bundle, replace_frame_annotation, scan_catalog_root
from .trajectory import DiscardedEvent, process_event_gap

_T_MATCH_TOL = 1e-6


class PointsPayload(BaseModel):
    left: list[tuple[float, float]] = Field(min_length=2, max_length=2)
    right: list[tuple[float, float]] = Field(min_length=2, max_length=2)
    pov: tuple[float, float]
    image: str = ""


def _frame_time_from_name(name: str) -> Optional[float]:
    # simulator image convention: frame_<t>.png
    stem = Path(name).stem
    if stem.startswith("frame_"):
        try:
            return float(stem[len("frame_") :])
        except ValueError:
            return None
    return None


def _overlay_payload(fa: FrameAnnotation, cam: CameraIntrinsics) -> Optional[dict]:
    try:
        seg = overlay_segments(fa, cam)
    except ValueError:
        return None
    return {
        "left": [[p.u, p.v] for p in seg.left],
        "right": [[p.u, p.v] for p in seg.right],
        "width_segment": [[p.u, p.v] for p in seg.width_segment],
    }


def _range_payload(est) -> dict:
    def num(x: float) -> Optional[float]:
        return None if math.isnan(x) else x

    return {
        "t_s": est.t,
        "w": num(est.w),
        "z_c_m": num(est.z_c),
        "r_m": num(est.r),
        "qualified": est.qualified,
    }


def create_app(
    catalog_root: str | Path,
    camera: CameraIntrinsics,
    thresholds: Optional[WarningThresholds] = None,
) -> FastAPI:
    root = Path(catalog_root)
    thresholds = thresholds or WarningThresholds()
    app = FastAPI(title="truckgap annotation service")

    def bundle_or_404(event_id: str):
        path = root / event_id
        if not path.is_dir():
            raise HTTPException(status_code=404, detail=f"unknown event {event_id}")
        return load_event_bundle(path)

    def frame_entry(bundle, t: float) -> Optional[FrameAnnotation]:
        for fa in bundle.event.frames:
            if abs(fa.t - t) <= _T_MATCH_TOL:
                return fa
        return None

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "events": len(scan_catalog_root(root))}

    @app.get("/events")
    def list_events() -> list[dict]:
        out = []
        for path in scan_catalog_root(root):
            bundle = load_event_bundle(path)
            ev = bundle.event
            out.append(
                {
                    "event_id": ev.event_id,
                    "direction": ev.direction,
                    "subset": bundle.subset,
                    "t_lc_s": ev.t_lc,
                    "n_annotated": len(ev.frames),
                    "lane_width_m": ev.lane_width,
                    "trailer_length_m": ev.trailer_length,
                }
            )
        return out

    @app.get("/events/{event_id}")
    def get_event(event_id: str) -> dict:
        bundle = bundle_or_404(event_id)
        ev = bundle.event
        annotated = {fa.t: fa for fa in ev.frames}
        frames: dict[float, dict] = {}
        frames_dir = root / event_id / FRAMES_DIR
        if frames_dir.is_dir():
            for img in sorted(frames_dir.iterdir()):
                t = _frame_time_from_name(img.name)
                if t is not None:
                    frames[t] = {"t_s": t, "image": img.name, "points": None}
        for t, fa in annotated.items():
            entry = frames.setdefault(t, {"t_s": t, "image": fa.image_ref, "points": None})
            entry["points"] = {
                "left": [[p.u, p.v] for p in fa.left],
                "right": [[p.u, p.v] for p in fa.right],
                "pov": [fa.pov.u, fa.pov.v],
            }
        return {
            "event_id": ev.event_id,
            "direction": ev.direction,
            "subset": bundle.subset,
            "t_start_s": ev.t_start,
            "t_lc_s": ev.t_lc,
            "t_end_s": ev.t_end,
            "lane_width_m": ev.lane_width,
            "trailer_length_m": ev.trailer_length,
            "frames": [frames[t] for t in sorted(frames)],
        }

    @app.get("/events/{event_id}/frames/{t}/image")
    def get_frame_image(event_id: str, t: float):
        bundle = bundle_or_404(event_id)
        frames_dir = root / event_id / FRAMES_DIR
        if frames_dir.is_dir():
            for img in frames_dir.iterdir():
                t_img = _frame_time_from_name(img.name)
                if t_img is not None and abs(t_img - t) <= _T_MATCH_TOL:
                    return FileResponse(img)
        fa = frame_entry(bundle, t)
        if fa is not None and fa.image_ref:
            img = frames_dir / fa.image_ref
            if img.is_file():
                return FileResponse(img)
        raise HTTPException(status_code=404, detail=f"no image for frame t={t}")

    @app.put("/events/{event_id}/frames/{t}/points")
    def put_points(event_id: str, t: float, payload: PointsPayload) -> dict:
        bundle = bundle_or_404(event_id)
        try:
            fa = FrameAnnotation(
                t=t,
                left=(PixelPoint(*payload.left[0]), PixelPoint(*payload.left[1])),
                right=(PixelPoint(*payload.right[0]), PixelPoint(*payload.right[1])),
                pov=PixelPoint(*payload.pov),
                image_ref=payload.image,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        replace_frame_annotation(root / event_id, fa)
        est = estimate_frame_range(fa, camera, bundle.event.lane_width, bundle.event.trailer_length)
        return {
            "range": _range_payload(est),
            "overlay": _overlay_payload(fa, camera),
        }

    @app.post("/events/{event_id}/compute")
    def compute(event_id: str) -> dict:
        bundle = bundle_or_404(event_id)
        result = process_event_gap(bundle.event, camera, thresholds=thresholds)
        if isinstance(result, DiscardedEvent):
            return {
                "outcome": f"discarded_{result.reason}",
                "frames_qualified": result.frames_qualified,
            }
        return {
            "outcome": "ok",
            "event_id": result.event_id,
            "direction": result.direction,
            "r_lc_m": result.r_lc,
            "rdot_mps": result.rdot,
            "delta_t_s": result.delta_t,
            "t_n_s": result.t_n,
            "frames_used": result.frames_used,
            "ttc_s": result.ttc,
            "d_req_mps2": result.d_req,
            "warning": {
                "ttc_warning": result.warning.ttc_warning,
                "d_req_warning": result.warning.d_req_warning,
                "range_warning": result.warning.range_warning,
            },
        }

    return app
