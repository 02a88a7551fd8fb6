import json
import subprocess
import sys

import pytest

from radmot.cli import main
from radmot.pipeline import dump_config, preset


@pytest.fixture
def scene(tmp_path):
    out = tmp_path / "scene"
    assert main(["synth", "--seed", "5", "--profile", "lidar", "--out-dir", str(out),
                 "--objects", "4", "--frames", "15", "--ego-speed", "1.0"]) == 0
    return out


def test_presets_lists_rows(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("ab3dmot", "ab3dmot_mh", "castrack", "simpletrack", "centerpoint"):
        assert name in out
    assert "PCGDA" in out and "Two Stage" in out


def test_track_and_eval(scene, tmp_path, capsys):
    res = tmp_path / "res.csv"
    assert main(["track", "--dets", str(scene / "detections.csv"), "--ego", str(scene / "ego.csv"),
                 "--preset", "ab3dmot", "--out", str(res)]) == 0
    report = tmp_path / "report.json"
    assert main(["eval", "--gt", str(scene / "gt.csv"), "--hyp", str(res),
                 "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert 0 <= data["overall"]["HOTA"] <= 100
    assert report.with_suffix(".txt").exists()
    assert "HOTA" in capsys.readouterr().out
    assert main(["eval", "--gt", str(scene / "gt.csv"), "--hyp", str(res), "--alpha-sweep",
                 "--report", str(report)]) == 0
    assert main(["eval", "--gt", str(scene / "gt.csv"), "--hyp", str(res), "--match", "center",
                 "--alpha", "2.0", "--report", str(report)]) == 0


def test_track_with_config_file(scene, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(dump_config(preset("simpletrack")))
    res = tmp_path / "res.csv"
    assert main(["track", "--dets", str(scene / "detections.csv"), "--ego", str(scene / "ego.csv"),
                 "--config", str(cfg), "--out", str(res), "--stationary-ego"]) == 0
    assert "ego_mode=stationary" in res.read_text().splitlines()[0]


def test_exit_codes(scene, tmp_path):
    args = ["track", "--dets", str(scene / "detections.csv"), "--ego", str(scene / "ego.csv"),
            "--out", str(tmp_path / "r.csv")]
    assert main(args + ["--preset", "sort"]) == 2
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text('{"similarity": {"metrik": "iou"}}')
    assert main(args + ["--config", str(bad_cfg)]) == 2
    bad_cfg.write_text("{not json")
    assert main(args + ["--config", str(bad_cfg)]) == 2
    bad_dets = tmp_path / "d.csv"
    bad_dets.write_text("frame,class\n")
    assert main(["track", "--dets", str(bad_dets), "--ego", str(scene / "ego.csv"),
                 "--preset", "ab3dmot", "--out", str(tmp_path / "r.csv")]) == 1
    assert main(["track", "--dets", str(tmp_path / "missing.csv"), "--ego", str(scene / "ego.csv"),
                 "--preset", "ab3dmot", "--out", str(tmp_path / "r.csv")]) == 1
    assert main(["eval", "--gt", str(scene / "gt.csv"), "--hyp", str(bad_dets),
                 "--report", str(tmp_path / "x.json")]) == 1


def test_byte_determinism(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["synth", "--seed", "11", "--profile", "radar", "--out-dir", str(d)]) == 0
        assert main(["track", "--dets", str(d / "detections.csv"), "--ego", str(d / "ego.csv"),
                     "--preset", "castrack", "--out", str(d / "res.csv")]) == 0
        outs.append([(d / n).read_bytes() for n in ("detections.csv", "ego.csv", "gt.csv", "res.csv")])
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "radmot", "presets"], capture_output=True, text=True)
    assert proc.returncode == 0 and "castrack" in proc.stdout
