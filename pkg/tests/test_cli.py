import json
from pathlib import Path

import numpy as np

from truckgap.cli import main
from truckgap.store import EventBundle, save_event_bundle
from truckgap.synthetic import (
    SyntheticScene,
    make_default_camera,
    synthesize_channels,
    synthesize_event,
)


def _tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_simulate_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        rc = main(
            [
                "simulate",
                "--out",
                str(out),
                "--seed",
                "7",
                "--n-events",
                "2",
                "--frames",
                "8",
                "--noise-px",
                "0.75",
                "--images",
            ]
        )
        assert rc == 0
    assert _tree_bytes(a) == _tree_bytes(b)


def test_simulate_estimate_stats_round_trip(tmp_path, capsys):
    out = tmp_path / "catalog"
    main(["simulate", "--out", str(out), "--seed", "3", "--n-events", "3", "--frames", "10"])
    bundles = sorted(str(p) for p in out.iterdir() if p.is_dir())
    results = tmp_path / "results.csv"
    catalog = tmp_path / "catalog.csv"
    rc = main(
        [
            "estimate",
            *bundles,
            "--camera",
            str(out / "camera.json"),
            "--out",
            str(results),
            "--catalog",
            str(catalog),
        ]
    )
    assert rc == 0
    lines = results.read_text().splitlines()
    assert len(lines) == 4  # header + 3 events
    assert all(",ok," in line for line in lines[1:])

    rc = main(["stats", str(results), "--catalog", str(catalog)])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "3 with gap results" in captured
    assert "POV appearance rate" in captured


def test_estimate_idempotent_csv(tmp_path):
    out = tmp_path / "catalog"
    main(["simulate", "--out", str(out), "--seed", "5", "--n-events", "2", "--frames", "9"])
    bundles = sorted(str(p) for p in out.iterdir() if p.is_dir())
    r1 = tmp_path / "r1.csv"
    r2 = tmp_path / "r2.csv"
    for r in (r1, r2):
        main(["estimate", *bundles, "--camera", str(out / "camera.json"), "--out", str(r)])
    assert r1.read_bytes() == r2.read_bytes()


def test_screen_command(tmp_path, capsys):
    out = tmp_path / "catalog"
    main(["simulate", "--out", str(out), "--seed", "1", "--n-events", "1", "--frames", "8"])
    bundle = next(p for p in out.iterdir() if p.is_dir())
    rc = main(["screen", str(bundle)])
    assert rc == 0
    assert "passes" in capsys.readouterr().out


def test_compare_radar_on_truth_series(tmp_path, capsys):
    cam = make_default_camera()
    scene = SyntheticScene(cam=cam, trailer_length=0.0)
    event = synthesize_event("rad0", r0=25.0, rdot=-1.0, n_frames=10, scene=scene)
    event.channels = synthesize_channels(t_lc=event.t_lc)
    radar_t = np.arange(0.0, event.frames[-1].t + 0.05, 0.1)
    radar = np.column_stack([radar_t, 25.0 - 1.0 * radar_t])
    path = save_event_bundle(EventBundle(event=event, radar=radar), tmp_path / "rad0")

    cam_path = tmp_path / "camera.json"
    cam_path.write_text(json.dumps(cam.to_dict()))
    out_csv = tmp_path / "radar_stats.csv"
    rc = main(["compare-radar", str(path), "--camera", str(cam_path), "--out", str(out_csv)])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "pairs: 10" in captured
    header, row = out_csv.read_text().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    # camera estimates vs truth radar: sub-percent agreement at zero noise
    assert abs(float(cols["mean_err_pct"])) < 0.5


def test_estimate_marker_pattern_filter(tmp_path, capsys):
    cam = make_default_camera()
    for event_id, pattern in (("pat0", "dashed-dashed-solid"), ("pat1", "all-dashed")):
        scene = SyntheticScene(cam=cam, trailer_length=14.0)
        event = synthesize_event(event_id, r0=40.0, rdot=-1.5, n_frames=10, scene=scene)
        event.channels = synthesize_channels(t_lc=event.t_lc)
        event.marker_pattern = pattern
        save_event_bundle(EventBundle(event=event), tmp_path / event_id)
    cam_path = tmp_path / "camera.json"
    cam_path.write_text(json.dumps(cam.to_dict()))
    out = tmp_path / "results.csv"
    main(
        [
            "estimate",
            str(tmp_path / "pat0"),
            str(tmp_path / "pat1"),
            "--camera",
            str(cam_path),
            "--marker-pattern",
            "all-dashed",
            "--out",
            str(out),
        ]
    )
    lines = out.read_text().splitlines()
    assert any("pat0,left,non-ramp,filtered_marker_pattern" in line for line in lines)
    assert any(line.startswith("pat1,left,non-ramp,ok") for line in lines)


def test_compare_radar_does_not_mix_events(tmp_path, capsys):
    # two events whose event-relative times coincide but ranges differ;
    # pairing must stay within each event
    cam = make_default_camera()
    for event_id, r0 in (("mixa", 18.0), ("mixb", 28.0)):
        scene = SyntheticScene(cam=cam, trailer_length=0.0)
        event = synthesize_event(event_id, r0=r0, rdot=-1.0, n_frames=10, scene=scene)
        event.channels = synthesize_channels(t_lc=event.t_lc)
        radar_t = np.arange(0.0, event.frames[-1].t + 0.05, 0.1)
        radar = np.column_stack([radar_t, r0 - 1.0 * radar_t])
        save_event_bundle(EventBundle(event=event, radar=radar), tmp_path / event_id)
    cam_path = tmp_path / "camera.json"
    cam_path.write_text(json.dumps(cam.to_dict()))
    rc = main(["compare-radar", str(tmp_path / "mixa"), str(tmp_path / "mixb"),
               "--camera", str(cam_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "pairs: 20" in out
    mean_line = next(line for line in out.splitlines() if line.startswith("mean error"))
    assert abs(float(mean_line.split()[2])) < 0.05
