import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radmot.io import (
    DET_COLUMNS,
    GT_COLUMNS,
    ParseError,
    parse_detections,
    parse_ego,
    parse_ground_truth,
    parse_results,
    parse_sequence,
    write_detections,
    write_ego,
    write_ground_truth,
    write_results,
)
from radmot.metrics import evaluate
from radmot.model import Box3D, EgoPose, FrameBundle, SequenceError, TrackedBox
from radmot.pipeline import preset, run_sequence
from radmot.synth import PROFILES, ScenarioSpec, generate_scenario

DET_HEADER = ",".join(DET_COLUMNS)
GT_HEADER = ",".join(GT_COLUMNS)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_example_detection_line(tmp_path):
    p = _write(tmp_path, "d.csv", f"# comment\n{DET_HEADER}\n12,car,1.5,-2.0,0.3,4.2,1.8,1.6,0.10,0.87,,,\n")
    dets = parse_detections(p)
    (box,) = dets[12]
    assert (box.class_id, box.cx, box.cy, box.length, box.score) == ("car", 1.5, -2.0, 4.2, 0.87)
    assert box.velocity is None and box.feature is None


def test_velocity_and_features(tmp_path):
    p = _write(tmp_path, "d.csv", f"{DET_HEADER}\n0,cyclist,1,2,0,1.8,0.7,1.6,0,0.5,1.5,-0.5,0.1;0.2;0.3\n")
    (box,) = parse_detections(p)[0]
    assert box.velocity == (1.5, -0.5) and box.feature == (0.1, 0.2, 0.3)


@pytest.mark.parametrize("line,field", [
    ("3,car,1,2,0,4,-1.8,1.6,0,0.9,,,", "width"),
    ("3,car,1,2,0,4,1.8,1.6,0,1.5,,,", "score"),
    ("3,car,1,2,0,4,1.8,1.6,90,0.9,,,", "yaw"),
    ("3,truck,1,2,0,4,1.8,1.6,0,0.9,,,", "class"),
    ("3,car,x,2,0,4,1.8,1.6,0,0.9,,,", "cx"),
    ("3,car,1,2,0,4,1.8,1.6,0,0.9,1,,", "vx"),
])
def test_bad_rows_report_line(tmp_path, line, field):
    p = _write(tmp_path, "d.csv", f"# header comment\n{DET_HEADER}\n0,car,1,2,0,4,1.8,1.6,0,0.9,,,\n{line}\n")
    with pytest.raises(ParseError) as exc:
        parse_detections(p)
    assert exc.value.line == 4
    assert exc.value.field == field
    assert ":4" in str(exc.value)


def test_wrong_header_and_field_count(tmp_path):
    with pytest.raises(ParseError):
        parse_detections(_write(tmp_path, "a.csv", "frame,class\n"))
    with pytest.raises(ParseError):
        parse_detections(_write(tmp_path, "b.csv", f"{DET_HEADER}\n0,car,1\n"))
    with pytest.raises(ParseError):
        parse_detections(_write(tmp_path, "c.csv", ""))


def test_duplicate_gt_rejected(tmp_path):
    row = "0,car,7,1,2,0,4,1.8,1.6,0,1,,,"
    with pytest.raises(ParseError, match="duplicate"):
        parse_ground_truth(_write(tmp_path, "g.csv", f"{GT_HEADER}\n{row}\n{row}\n"))


def test_ego_must_increase(tmp_path):
    with pytest.raises(ParseError):
        parse_ego(_write(tmp_path, "e.csv", "frame,x,y,yaw\n1,0,0,0\n1,0,0,0\n"))


def test_missing_ego_frame(tmp_path):
    d = _write(tmp_path, "d.csv", f"{DET_HEADER}\n0,car,1,2,0,4,1.8,1.6,0,0.9,,,\n2,car,1,2,0,4,1.8,1.6,0,0.9,,,\n")
    e = _write(tmp_path, "e.csv", "frame,x,y,yaw\n0,0,0,0\n1,0,0,0\n")
    with pytest.raises(SequenceError):
        parse_sequence(d, e)
    bundle = parse_sequence(d)
    assert [f.frame_index for f in bundle.frames] == [0, 2]


def test_range_filter(tmp_path):
    d = _write(tmp_path, "d.csv", f"{DET_HEADER}\n0,car,10,0,0,4,1.8,1.6,0,0.9,,,\n0,car,60,0,0,4,1.8,1.6,0,0.9,,,\n")
    assert len(parse_sequence(d).frames[0].detections) == 2
    assert len(parse_sequence(d, max_range=52.6).frames[0].detections) == 1


def test_empty_results_header_only(tmp_path):
    p = tmp_path / "r.csv"
    write_results([], p)
    assert p.read_text() == "frame,track_id,class,cx,cy,cz,length,width,height,yaw,score\n"
    assert parse_results(p) == []


def test_results_sorted_and_deterministic(tmp_path):
    rows = [TrackedBox(1, 2, Box3D(0, 0, 0, 1, 1, 1, 0, "car")),
            TrackedBox(0, 5, Box3D(0.1, 0, 0, 1, 1, 1, 0.3, "pedestrian", 0.4)),
            TrackedBox(1, 1, Box3D(1 / 3, 0, 0, 1, 1, 1, 0, "car"))]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results(rows, a)
    write_results(list(reversed(rows)), b)
    assert a.read_bytes() == b.read_bytes()
    assert [(r.frame_index, r.track_id) for r in parse_results(a)] == [(0, 5), (1, 1), (1, 2)]


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)
boxes = st.builds(
    Box3D, finite, finite, finite, positive, positive, positive,
    st.floats(-math.pi, math.pi), st.sampled_from(["car", "pedestrian", "cyclist"]),
    st.floats(0, 1), velocity=st.none() | st.tuples(finite, finite),
    feature=st.none() | st.lists(finite, min_size=1, max_size=4).map(tuple),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(boxes, max_size=6))
def test_detection_round_trip_exact(tmp_path_factory, bs):
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    frames = [FrameBundle(0, tuple(bs), EgoPose(0)), FrameBundle(3, tuple(bs[:2]), EgoPose(3))]
    write_detections(frames, p)
    back = parse_detections(p)
    assert back.get(0, []) == list(bs)
    assert back.get(3, []) == list(bs[:2])


@settings(max_examples=50, deadline=None)
@given(st.lists(boxes, max_size=6))
def test_gt_and_results_round_trip(tmp_path_factory, bs):
    d = tmp_path_factory.mktemp("rt")
    rows = [TrackedBox(k // 2, k + 1, b) for k, b in enumerate(bs)]
    write_ground_truth(rows, d / "g.csv")
    assert parse_ground_truth(d / "g.csv") == rows
    write_results(rows, d / "r.csv")
    plain = [TrackedBox(r.frame_index, r.track_id, Box3D(
        r.box.cx, r.box.cy, r.box.cz, r.box.length, r.box.width, r.box.height,
        r.box.yaw, r.box.class_id, r.box.score)) for r in rows]
    assert parse_results(d / "r.csv") == plain


def test_ego_round_trip(tmp_path):
    poses = [EgoPose(0, 0.1, -2.5, 0.3), EgoPose(4, 1 / 3, 2 / 7, -3.0)]
    write_ego(poses, tmp_path / "e.csv", comments=["seed 1"])
    assert list(parse_ego(tmp_path / "e.csv").values()) == poses


def test_eval_round_trip(tmp_path):
    scn = generate_scenario(ScenarioSpec(n_objects=5, n_frames=20, seed=4, noise=PROFILES["lidar"]))
    hyp = run_sequence(scn.bundle.frames, preset("ab3dmot"))
    write_results(hyp, tmp_path / "r.csv")
    write_ground_truth(scn.ground_truth, tmp_path / "g.csv")
    disk = evaluate(parse_ground_truth(tmp_path / "g.csv"), parse_results(tmp_path / "r.csv"))
    mem = evaluate(scn.ground_truth, hyp)
    assert disk.to_json() == mem.to_json()
