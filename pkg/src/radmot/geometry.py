"""BEV overlap and distance measures between oriented boxes, plus NMS."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .model import Box3D


@dataclass(frozen=True)
class Polygon2D:
    """Convex CCW polygon."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        if self.signed_area() <= 0:
            raise ValueError("polygon must be counter-clockwise with positive area")

    def signed_area(self) -> float:
        v = np.asarray(self.vertices, dtype=float)
        return float(_kernels.polygon_area(v, v.shape[0]))

    @classmethod
    def from_box(cls, box: Box3D) -> "Polygon2D":
        return cls(footprint(box))

    def intersect(self, other: "Polygon2D") -> "Polygon2D | None":
        buf, n = _kernels.clip_convex(
            np.ascontiguousarray(self.vertices, dtype=float),
            np.ascontiguousarray(other.vertices, dtype=float),
        )
        if n < 3 or _kernels.polygon_area(buf, n) < _kernels.AREA_EPS:
            return None
        return Polygon2D(buf[:n].copy())


def footprint(box: Box3D) -> np.ndarray:
    return _kernels.box_corners(box.cx, box.cy, box.length, box.width, box.yaw)


def _areas(a: Box3D, b: Box3D) -> tuple[float, float, float]:
    inter, union, hull = _kernels.bev_overlap(a.bev_row(), b.bev_row())
    return float(inter), float(union), float(hull)


def iou_bev(a: Box3D, b: Box3D) -> float:
    inter, union, _ = _areas(a, b)
    return min(inter / union, 1.0)


def giou_bev(a: Box3D, b: Box3D) -> float:
    inter, union, hull = _areas(a, b)
    return min(inter / union, 1.0) - (hull - union) / hull


def iou_3d(a: Box3D, b: Box3D) -> float:
    """BEV intersection times vertical overlap over the volume union."""
    inter, _, _ = _areas(a, b)
    za0, za1 = a.cz - a.height / 2, a.cz + a.height / 2
    zb0, zb1 = b.cz - b.height / 2, b.cz + b.height / 2
    dz = max(0.0, min(za1, zb1) - max(za0, zb0))
    inter_v = inter * dz
    va = a.length * a.width * a.height
    vb = b.length * b.width * b.height
    return min(inter_v / (va + vb - inter_v), 1.0)


def l2_center(a: Box3D, b: Box3D) -> float:
    return float(np.hypot(a.cx - b.cx, a.cy - b.cy))


def stack_bev(boxes: Sequence[Box3D]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 5))
    return np.array([b.bev_row() for b in boxes])


def pairwise_iou_giou(a: Sequence[Box3D], b: Sequence[Box3D]) -> tuple[np.ndarray, np.ndarray]:
    return _kernels.pairwise_bev(stack_bev(a), stack_bev(b))


def pairwise_l2(a: Sequence[Box3D], b: Sequence[Box3D]) -> np.ndarray:
    ca = stack_bev(a)[:, :2]
    cb = stack_bev(b)[:, :2]
    return np.linalg.norm(ca[:, None, :] - cb[None, :, :], axis=-1)


def nms_bev(boxes: Sequence[Box3D], iou_threshold: float) -> list[Box3D]:
    """Greedy score-descending suppression; ties keep input order."""
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must lie in [0, 1]")
    if not boxes:
        return []
    order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
    iou, _ = pairwise_iou_giou(boxes, boxes)
    kept: list[int] = []
    for i in order:
        if all(iou[i, k] < iou_threshold for k in kept):
            kept.append(i)
    return [boxes[i] for i in kept]
