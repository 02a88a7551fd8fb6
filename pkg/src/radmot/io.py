"""Flat-text file formats for detections, ground truth, ego poses and results."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import Box3D, EgoPose, FrameBundle, SequenceError, TrackedBox

DET_COLUMNS = ("frame", "class", "cx", "cy", "cz", "length", "width", "height",
               "yaw", "score", "vx", "vy", "features")
GT_COLUMNS = DET_COLUMNS[:2] + ("track_id",) + DET_COLUMNS[2:]
RESULT_COLUMNS = ("frame", "track_id", "class", "cx", "cy", "cz", "length", "width",
                  "height", "yaw", "score")
EGO_COLUMNS = ("frame", "x", "y", "yaw")

RANGE_PROFILES = {"vod": 52.6}


class ParseError(ValueError):
    def __init__(self, path, line: int, field: Optional[str], msg: str):
        where = f"{path}:{line}" + (f" [{field}]" if field else "")
        super().__init__(f"{where}: {msg}")
        self.path, self.line, self.field = str(path), line, field


@dataclass(frozen=True)
class SequenceBundle:
    sequence_id: str
    frames: tuple[FrameBundle, ...]
    ground_truth: Optional[tuple[TrackedBox, ...]] = None


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


# -- reading -----------------------------------------------------------------

def _rows(path, columns: Sequence[str]):
    """Yield (line_number, {column: raw}) for each data row."""
    path = Path(path)
    header_seen = False
    with path.open(encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen:
                if tuple(cells) != tuple(columns):
                    raise ParseError(path, n, None, f"expected header {','.join(columns)}")
                header_seen = True
                continue
            if len(cells) != len(columns):
                raise ParseError(path, n, None, f"expected {len(columns)} fields, got {len(cells)}")
            yield n, dict(zip(columns, cells))
    if not header_seen:
        raise ParseError(path, 0, None, "missing header line")


def _num(path, n, row, key, kind=float, optional=False):
    v = row[key]
    if v == "":
        if optional:
            return None
        raise ParseError(path, n, key, "missing value")
    try:
        out = kind(v)
    except ValueError:
        raise ParseError(path, n, key, f"not a valid {kind.__name__}: {v!r}") from None
    if kind is float and not math.isfinite(out):
        raise ParseError(path, n, key, "non-finite value")
    return out


def _box(path, n, row) -> Box3D:
    g = lambda k, **kw: _num(path, n, row, k, **kw)  # noqa: E731
    yaw = g("yaw")
    if abs(yaw) > 2 * math.pi:
        raise ParseError(path, n, "yaw", "angle outside [-2pi, 2pi]; angles must be radians")
    vx, vy = g("vx", optional=True), g("vy", optional=True)
    if (vx is None) != (vy is None):
        raise ParseError(path, n, "vx", "vx and vy must both be present or both empty")
    feature = None
    if row.get("features"):
        try:
            feature = tuple(float(x) for x in row["features"].split(";"))
        except ValueError:
            raise ParseError(path, n, "features", "expected ';'-separated numbers") from None
    score = g("score", optional=True)
    vals = {k: g(k) for k in ("cx", "cy", "cz", "length", "width", "height")}
    for k in ("length", "width", "height"):
        if vals[k] <= 0:
            raise ParseError(path, n, k, f"{k} must be positive, got {vals[k]}")
    if score is not None and not 0.0 <= score <= 1.0:
        raise ParseError(path, n, "score", f"score must lie in [0, 1], got {score}")
    try:
        return Box3D(
            **vals, yaw=yaw, class_id=row["class"],
            score=1.0 if score is None else score,
            velocity=None if vx is None else (vx, vy),
            feature=feature,
        )
    except ValueError as exc:
        raise ParseError(path, n, "class", str(exc)) from None


def parse_detections(path) -> dict[int, list[Box3D]]:
    out: dict[int, list[Box3D]] = defaultdict(list)
    for n, row in _rows(path, DET_COLUMNS):
        out[_num(path, n, row, "frame", int)].append(_box(path, n, row))
    return dict(out)


def _parse_tracked(path, columns) -> list[TrackedBox]:
    out = []
    seen = set()
    for n, row in _rows(path, columns):
        frame = _num(path, n, row, "frame", int)
        tid = _num(path, n, row, "track_id", int)
        if (frame, tid) in seen:
            raise ParseError(path, n, "track_id", f"duplicate (frame, track_id) = ({frame}, {tid})")
        seen.add((frame, tid))
        if "vx" not in row:
            row = {**row, "vx": "", "vy": "", "features": ""}
        out.append(TrackedBox(frame, tid, _box(path, n, row)))
    return out


def parse_ground_truth(path) -> list[TrackedBox]:
    return _parse_tracked(path, GT_COLUMNS)


def parse_results(path) -> list[TrackedBox]:
    return _parse_tracked(path, RESULT_COLUMNS)


def parse_ego(path) -> dict[int, EgoPose]:
    out: dict[int, EgoPose] = {}
    last = None
    for n, row in _rows(path, EGO_COLUMNS):
        f = _num(path, n, row, "frame", int)
        if last is not None and f <= last:
            raise ParseError(path, n, "frame", "ego frame indices must be strictly increasing")
        yaw = _num(path, n, row, "yaw")
        if abs(yaw) > 2 * math.pi:
            raise ParseError(path, n, "yaw", "angle outside [-2pi, 2pi]; angles must be radians")
        out[f] = EgoPose(f, _num(path, n, row, "x"), _num(path, n, row, "y"), yaw)
        last = f
    return out


def _in_range(box: Box3D, max_range: Optional[float]) -> bool:
    return max_range is None or math.hypot(box.cx, box.cy) <= max_range


def parse_sequence(
    detection_path,
    ego_path=None,
    gt_path=None,
    max_range: Optional[float] = None,
    sequence_id: Optional[str] = None,
) -> SequenceBundle:
    """Load one sequence. Without an ego file, identity poses are synthesized."""
    dets = parse_detections(detection_path)
    gt = parse_ground_truth(gt_path) if gt_path is not None else None
    if ego_path is not None:
        poses = parse_ego(ego_path)
        missing = sorted(set(dets) - set(poses))
        if missing:
            raise SequenceError(f"no ego pose for frame(s) {missing[:10]}")
    else:
        idx = set(dets) | ({r.frame_index for r in gt} if gt else set())
        poses = {f: EgoPose(f) for f in sorted(idx)}
    frames = tuple(
        FrameBundle(f, tuple(d for d in dets.get(f, []) if _in_range(d, max_range)), poses[f])
        for f in sorted(poses)
    )
    if gt is not None:
        gt = tuple(r for r in gt if _in_range(r.box, max_range))
    return SequenceBundle(sequence_id or Path(detection_path).stem, frames, gt)


# -- writing -----------------------------------------------------------------

def _box_cells(b: Box3D) -> list[str]:
    return [fmt_float(v) for v in (b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw, b.score)]


def _extra_cells(b: Box3D) -> list[str]:
    vx, vy = ("", "") if b.velocity is None else (fmt_float(b.velocity[0]), fmt_float(b.velocity[1]))
    feat = "" if b.feature is None else ";".join(fmt_float(x) for x in b.feature)
    return [vx, vy, feat]


def _write(path, columns, rows: Iterable[list[str]], comments: Sequence[str] = ()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    lines.extend(",".join(r) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_results(results: Iterable[TrackedBox], path, comments: Sequence[str] = ()) -> None:
    rows = sorted(results, key=lambda r: (r.frame_index, r.track_id))
    _write(path, RESULT_COLUMNS, (
        [str(r.frame_index), str(r.track_id), r.box.class_id] + _box_cells(r.box) for r in rows
    ), comments)


def write_detections(frames: Iterable[FrameBundle], path, comments: Sequence[str] = ()) -> None:
    def rows():
        for fb in sorted(frames, key=lambda f: f.frame_index):
            for b in fb.detections:
                c = _box_cells(b)
                yield [str(fb.frame_index), b.class_id] + c + _extra_cells(b)
    _write(path, DET_COLUMNS, rows(), comments)


def write_ground_truth(rows: Iterable[TrackedBox], path, comments: Sequence[str] = ()) -> None:
    rows = sorted(rows, key=lambda r: (r.frame_index, r.track_id))
    _write(path, GT_COLUMNS, (
        [str(r.frame_index), r.box.class_id, str(r.track_id)] + _box_cells(r.box) + _extra_cells(r.box)
        for r in rows
    ), comments)


def write_ego(poses: Iterable[EgoPose], path, comments: Sequence[str] = ()) -> None:
    _write(path, EGO_COLUMNS, (
        [str(p.frame_index), fmt_float(p.x), fmt_float(p.y), fmt_float(p.yaw)]
        for p in sorted(poses, key=lambda p: p.frame_index)
    ), comments)
