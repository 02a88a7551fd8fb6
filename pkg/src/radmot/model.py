"""Domain types shared by every pipeline stage."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CLASSES = ("car", "pedestrian", "cyclist")


class SequenceError(ValueError):
    """Frames out of order or missing sequence data."""

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
DEAD = "dead"

# observation vector layout shared by the filter and the distances
OBS_DIM = 7  # x, y, z, yaw, l, w, h
IDX_X, IDX_Y, IDX_Z, IDX_YAW, IDX_L, IDX_W, IDX_H = range(7)
IDX_VX, IDX_VY = 7, 8
IDX_AX, IDX_AY = 9, 10


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return theta - 2.0 * math.pi * math.ceil((theta - math.pi) / (2.0 * math.pi))


def normalize_angles(theta: np.ndarray) -> np.ndarray:
    return theta - 2.0 * np.pi * np.ceil((theta - np.pi) / (2.0 * np.pi))


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D box. Coordinates are in the current ego frame unless tagged."""

    cx: float
    cy: float
    cz: float
    length: float
    width: float
    height: float
    yaw: float
    class_id: str
    score: float = 1.0
    velocity: Optional[tuple[float, float]] = None
    feature: Optional[tuple[float, ...]] = None
    frame: str = "ego"

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.height > 0):
            raise ValueError(
                f"box dimensions must be positive, got "
                f"({self.length}, {self.width}, {self.height})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.class_id not in CLASSES:
            raise ValueError(f"unknown class {self.class_id!r}; expected one of {CLASSES}")
        yaw = normalize_angle(float(self.yaw))
        if yaw != self.yaw:
            object.__setattr__(self, "yaw", yaw)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def observation(self) -> np.ndarray:
        """Measurement vector [x, y, z, yaw, l, w, h]."""
        return np.array(
            [self.cx, self.cy, self.cz, self.yaw, self.length, self.width, self.height]
        )

    def bev_row(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.length, self.width, self.yaw])


@dataclass(frozen=True)
class EgoPose:
    frame_index: int
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0


@dataclass(frozen=True)
class FrameBundle:
    frame_index: int
    detections: tuple[Box3D, ...]
    ego: EgoPose


@dataclass(frozen=True)
class TrackedBox:
    """One row of a tracker result or ground-truth file."""

    frame_index: int
    track_id: int
    box: Box3D


@dataclass
class Track:
    """Persistent object hypothesis.

    ``mean``/``cov`` follow the motion-model state layout
    ``[x, y, z, yaw, l, w, h, vx, vy(, ax, ay)]``.
    """

    id: int
    class_id: str
    mean: np.ndarray
    cov: np.ndarray
    hits: int = 1
    misses: int = 0
    age: int = 0
    score: float = 1.0
    status: str = TENTATIVE
    prev_center: Optional[np.ndarray] = None
    feature: Optional[tuple[float, ...]] = None
    last_advanced: Optional[int] = None
    last_detection: Optional[Box3D] = field(default=None, repr=False)

    @property
    def alive(self) -> bool:
        return self.status != DEAD

    @property
    def center(self) -> np.ndarray:
        return self.mean[:2].copy()

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[IDX_VX:IDX_VY + 1].copy()

    def to_box(self, min_dim: float = 1e-3) -> Box3D:
        m = self.mean
        return Box3D(
            cx=float(m[IDX_X]),
            cy=float(m[IDX_Y]),
            cz=float(m[IDX_Z]),
            length=max(float(m[IDX_L]), min_dim),
            width=max(float(m[IDX_W]), min_dim),
            height=max(float(m[IDX_H]), min_dim),
            yaw=float(m[IDX_YAW]),
            class_id=self.class_id,
            score=min(max(self.score, 0.0), 1.0),
            velocity=(float(m[IDX_VX]), float(m[IDX_VY])),
        )


@dataclass(frozen=True)
class InitialCovariance:
    position: float = 1.0
    velocity: float = 10.0
    shape: float = 0.1
    acceleration: float = 1.0

    def matrix(self, state_dim: int) -> np.ndarray:
        diag = np.full(state_dim, self.shape)
        diag[[IDX_X, IDX_Y, IDX_Z]] = self.position
        diag[[IDX_VX, IDX_VY]] = self.velocity
        if state_dim > IDX_AX:
            diag[[IDX_AX, IDX_AY]] = self.acceleration
        return np.diag(diag)


class IdAllocator:
    """Monotone per-sequence track id source."""

    def __init__(self, start: int = 1):
        self._next = start

    def __call__(self) -> int:
        out = self._next
        self._next += 1
        return out


def init_track(
    d: Box3D,
    id: int,
    state_dim: int = 9,
    init_cov: InitialCovariance = InitialCovariance(),
    min_hits: int = 1,
) -> Track:
    mean = np.zeros(state_dim)
    mean[:7] = d.observation()
    if d.velocity is not None:
        mean[IDX_VX], mean[IDX_VY] = d.velocity
    return Track(
        id=id,
        class_id=d.class_id,
        mean=mean,
        cov=init_cov.matrix(state_dim),
        hits=1,
        misses=0,
        age=0,
        score=d.score,
        status=CONFIRMED if min_hits <= 1 else TENTATIVE,
        feature=d.feature,
        last_detection=d,
    )
