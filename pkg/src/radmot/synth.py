"""Seeded synthetic scenarios with detector-like corruption, plus test oracles."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .io import SequenceBundle, write_detections, write_ego, write_ground_truth
from .model import Box3D, EgoPose, FrameBundle, TrackedBox, normalize_angle

CLASS_DIMS = {  # length, width, height
    "car": (4.2, 1.8, 1.6),
    "pedestrian": (0.8, 0.6, 1.7),
    "cyclist": (1.8, 0.7, 1.6),
}
CLASS_SPEED = {"car": (3.0, 10.0), "pedestrian": (0.5, 1.8), "cyclist": (2.0, 6.0)}


@dataclass(frozen=True)
class NoiseProfile:
    name: str = "perfect"
    pos_sigma: float = 0.0
    yaw_sigma: float = 0.0
    size_sigma: float = 0.0
    vel_sigma: float = 0.0
    fn_rate: float = 0.0
    clutter_rate: float = 0.0  # expected new clutter objects per frame
    clutter_persistence: tuple = (1, 1)
    true_score: tuple = (1.0, 1.0)
    clutter_score: tuple = (0.1, 0.6)
    emit_velocity: bool = True

    def __post_init__(self):
        if not 0.0 <= self.fn_rate <= 1.0:
            raise ValueError("fn_rate must lie in [0, 1]")
        if min(self.pos_sigma, self.yaw_sigma, self.size_sigma, self.vel_sigma) < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be >= 0")
        lo, hi = self.clutter_persistence
        if not 1 <= lo <= hi:
            raise ValueError("clutter_persistence must satisfy 1 <= min <= max")


PROFILES = {
    "perfect": NoiseProfile(),
    # lidar: precise boxes, few misses, clutter that lingers for several frames
    "lidar": NoiseProfile(
        name="lidar", pos_sigma=0.1, yaw_sigma=0.03, size_sigma=0.05, vel_sigma=0.2,
        fn_rate=0.1, clutter_rate=1.0, clutter_persistence=(3, 5),
        true_score=(0.4, 1.0), clutter_score=(0.1, 0.6),
    ),
    # radar: noisier boxes, more misses, clutter that flashes for one frame
    "radar": NoiseProfile(
        name="radar", pos_sigma=0.3, yaw_sigma=0.15, size_sigma=0.1, vel_sigma=0.5,
        fn_rate=0.3, clutter_rate=4.0, clutter_persistence=(1, 1),
        true_score=(0.3, 1.0), clutter_score=(0.1, 0.7),
    ),
}


@dataclass(frozen=True)
class EgoSpec:
    speed: float = 0.0
    yaw_rate: float = 0.0
    pose_noise_pos: float = 0.0
    pose_noise_yaw: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    n_objects: int = 8
    n_frames: int = 40
    motion: str = "CV"
    classes: tuple = ("car", "pedestrian", "cyclist")
    accel_range: tuple = (-1.0, 1.0)
    occlusions: tuple = ()  # (object_index, first_frame, last_frame), inclusive
    occlusion_hides_gt: bool = True
    noise: NoiseProfile = NoiseProfile()
    ego: EgoSpec = EgoSpec()
    region: tuple = (5.0, 45.0, -20.0, 20.0)  # x_min, x_max, y_min, y_max at frame 0
    min_separation: float = 6.0
    frame_period: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.motion not in ("CV", "CA"):
            raise ValueError("motion must be CV or CA")
        if self.n_objects < 0 or self.n_frames < 1:
            raise ValueError("need n_objects >= 0 and n_frames >= 1")


@dataclass
class Scenario:
    bundle: SequenceBundle
    true_poses: tuple
    clutter_lifetimes: list = field(default_factory=list)
    spec: Optional[ScenarioSpec] = None

    @property
    def ground_truth(self):
        return list(self.bundle.ground_truth or ())


def _ego_trajectory(spec: ScenarioSpec) -> list[EgoPose]:
    x = y = yaw = 0.0
    poses = []
    dt = spec.frame_period
    for f in range(spec.n_frames):
        poses.append(EgoPose(f, x, y, yaw))
        x += spec.ego.speed * dt * math.cos(yaw)
        y += spec.ego.speed * dt * math.sin(yaw)
        yaw = normalize_angle(yaw + spec.ego.yaw_rate * dt)
    return poses


def _to_ego(pose: EgoPose, x, y, yaw, vx, vy):
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    dx, dy = x - pose.x, y - pose.y
    return (c * dx + s * dy, -s * dx + c * dy, normalize_angle(yaw - pose.yaw),
            c * vx + s * vy, -s * vx + c * vy)


def _sample_objects(spec: ScenarioSpec, rng: np.random.Generator):
    x0, x1, y0, y1 = spec.region
    objs = []
    tries = 0
    while len(objs) < spec.n_objects:
        tries += 1
        x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
        if tries < 10_000 and any(math.hypot(x - o["x"], y - o["y"]) < spec.min_separation for o in objs):
            continue
        cls = spec.classes[int(rng.integers(len(spec.classes)))]
        lo, hi = CLASS_SPEED[cls]
        speed = rng.uniform(lo, hi)
        heading = rng.uniform(-math.pi, math.pi)
        acc = rng.uniform(*spec.accel_range) if spec.motion == "CA" else 0.0
        objs.append(dict(cls=cls, x=x, y=y, heading=heading, speed=speed, acc=acc))
    return objs


def generate_scenario(spec: ScenarioSpec) -> Scenario:
    """Integrate ground truth, then corrupt it into a detection stream."""
    rng = np.random.default_rng(spec.seed)
    noise = spec.noise
    dt = spec.frame_period
    true_poses = _ego_trajectory(spec)
    objs = _sample_objects(spec, rng)
    hidden = {(o, f) for o, a, b in spec.occlusions for f in range(a, b + 1)}

    gt_rows: list[TrackedBox] = []
    dets: dict[int, list[Box3D]] = {f: [] for f in range(spec.n_frames)}
    for k, o in enumerate(objs):
        length, width, height = CLASS_DIMS[o["cls"]]
        for f in range(spec.n_frames):
            t = f * dt
            # motion along a fixed heading; speed integrates the acceleration
            dist = o["speed"] * t + 0.5 * o["acc"] * t * t
            v = o["speed"] + o["acc"] * t
            wx = o["x"] + dist * math.cos(o["heading"])
            wy = o["y"] + dist * math.sin(o["heading"])
            vx, vy = v * math.cos(o["heading"]), v * math.sin(o["heading"])
            ex, ey, eyaw, evx, evy = _to_ego(true_poses[f], wx, wy, o["heading"], vx, vy)
            box = Box3D(ex, ey, height / 2, length, width, height, eyaw, o["cls"], 1.0,
                        velocity=(evx, evy))
            occluded = (k, f) in hidden
            if not (occluded and spec.occlusion_hides_gt):
                gt_rows.append(TrackedBox(f, k + 1, box))
            if occluded or rng.random() < noise.fn_rate:
                continue
            dets[f].append(_corrupt(box, noise, rng))

    lifetimes = []
    x0, x1, y0, y1 = spec.region
    for f in range(spec.n_frames):
        n_new = int(rng.poisson(noise.clutter_rate)) if noise.clutter_rate > 0 else 0
        for _ in range(n_new):
            lo, hi = noise.clutter_persistence
            life = int(rng.integers(lo, hi + 1))
            pose = true_poses[f]
            cls = spec.classes[int(rng.integers(len(spec.classes)))]
            ex, ey = rng.uniform(x0, x1), rng.uniform(y0, y1)
            c, s = math.cos(pose.yaw), math.sin(pose.yaw)
            wx, wy = pose.x + c * ex - s * ey, pose.y + s * ex + c * ey
            wyaw = rng.uniform(-math.pi, math.pi)
            dims = [max(0.2, d * (1 + 0.1 * rng.standard_normal())) for d in CLASS_DIMS[cls]]
            score = rng.uniform(*noise.clutter_score)
            shown = 0
            for g in range(f, min(f + life, spec.n_frames)):
                px, py, pyaw, _, _ = _to_ego(true_poses[g], wx, wy, wyaw, 0.0, 0.0)
                jit = noise.pos_sigma * rng.standard_normal(2)
                vel = tuple(noise.vel_sigma * rng.standard_normal(2)) if noise.emit_velocity else None
                dets[g].append(Box3D(px + jit[0], py + jit[1], dims[2] / 2, dims[0], dims[1], dims[2],
                                     pyaw, cls, score, velocity=vel))
                shown += 1
            lifetimes.append(shown)

    reported = []
    for p in true_poses:
        if spec.ego.pose_noise_pos > 0 or spec.ego.pose_noise_yaw > 0:
            n = rng.standard_normal(3)
            p = EgoPose(p.frame_index, p.x + spec.ego.pose_noise_pos * n[0],
                        p.y + spec.ego.pose_noise_pos * n[1],
                        normalize_angle(p.yaw + spec.ego.pose_noise_yaw * n[2]))
        reported.append(p)
    frames = tuple(FrameBundle(f, tuple(dets[f]), reported[f]) for f in range(spec.n_frames))
    bundle = SequenceBundle(f"synth-{noise.name}-{spec.seed}", frames, tuple(gt_rows))
    return Scenario(bundle, tuple(true_poses), lifetimes, spec)


def _corrupt(box: Box3D, noise: NoiseProfile, rng: np.random.Generator) -> Box3D:
    lo, hi = noise.true_score
    score = lo if lo == hi else rng.uniform(lo, hi)
    if noise.pos_sigma == noise.yaw_sigma == noise.size_sigma == noise.vel_sigma == 0.0:
        return replace(box, score=score, velocity=box.velocity if noise.emit_velocity else None)
    p = noise.pos_sigma * rng.standard_normal(3)
    sz = noise.size_sigma * rng.standard_normal(3)
    vel = None
    if noise.emit_velocity:
        vn = noise.vel_sigma * rng.standard_normal(2)
        vel = (box.velocity[0] + vn[0], box.velocity[1] + vn[1])
    return replace(
        box,
        cx=box.cx + p[0], cy=box.cy + p[1], cz=box.cz + 0.5 * p[2],
        length=max(0.2, box.length + sz[0]), width=max(0.2, box.width + sz[1]),
        height=max(0.2, box.height + sz[2]),
        yaw=normalize_angle(box.yaw + noise.yaw_sigma * rng.standard_normal()),
        score=score, velocity=vel,
    )


def occlusion_scenario(gap: int = 4, speed: float = 2.0, before: int = 10, after: int = 8,
                       frame_period: float = 0.1) -> Scenario:
    """A walking pedestrian that vanishes for ``gap`` frames and stops while unseen.

    Detections are perfect; the ground-truth label is absent during the gap.
    """
    l, w, h = CLASS_DIMS["pedestrian"]
    gt_rows, frames = [], []
    x_stop = 10.0 + speed * frame_period * (before - 1)
    for f in range(before + gap + after):
        moving = f < before
        x = 10.0 + speed * frame_period * f if moving else x_stop
        box = Box3D(x, 2.0, h / 2, l, w, h, 0.0, "pedestrian", 1.0,
                    velocity=(speed if moving else 0.0, 0.0))
        visible = not before <= f < before + gap
        if visible:
            gt_rows.append(TrackedBox(f, 1, box))
        frames.append(FrameBundle(f, (box,) if visible else (), EgoPose(f)))
    bundle = SequenceBundle("occlusion", tuple(frames), tuple(gt_rows))
    return Scenario(bundle, tuple(fb.ego for fb in frames))


def write_scenario(scn: Scenario, out_dir, comments=()) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"dets": out / "detections.csv", "ego": out / "ego.csv", "gt": out / "gt.csv"}
    write_detections(scn.bundle.frames, paths["dets"], comments)
    write_ego([fb.ego for fb in scn.bundle.frames], paths["ego"], comments)
    write_ground_truth(scn.ground_truth, paths["gt"], comments)
    return paths


# -- oracles -----------------------------------------------------------------

def oracle_min_cost_assignment(cost) -> tuple[list[tuple[int, int]], float]:
    """Exhaustive minimum over all maximal matchings, for matrices up to 6x6."""
    c = np.asarray(cost, dtype=float)
    r, k = c.shape
    if max(r, k) > 6:
        raise ValueError("oracle limited to 6x6")
    if r == 0 or k == 0:
        return [], 0.0
    best, best_pairs = math.inf, []
    if r <= k:
        for perm in itertools.permutations(range(k), r):
            pairs = list(zip(range(r), perm))
            tot = math.fsum(c[i, j] for i, j in pairs)
            if tot < best:
                best, best_pairs = tot, pairs
    else:
        for perm in itertools.permutations(range(r), k):
            pairs = sorted(zip(perm, range(k)))
            tot = math.fsum(c[i, j] for i, j in pairs)
            if tot < best:
                best, best_pairs = tot, pairs
    return best_pairs, best


def _inside(pts, b: Box3D):
    c, s = math.cos(b.yaw), math.sin(b.yaw)
    dx = pts[:, 0] - b.cx
    dy = pts[:, 1] - b.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= b.length / 2) & (np.abs(v) <= b.width / 2)


def _extent(b: Box3D):
    c, s = abs(math.cos(b.yaw)), abs(math.sin(b.yaw))
    hx = 0.5 * (b.length * c + b.width * s)
    hy = 0.5 * (b.length * s + b.width * c)
    return b.cx - hx, b.cx + hx, b.cy - hy, b.cy + hy


def oracle_iou_mc(a: Box3D, b: Box3D, samples: int = 10**6, seed: int = 0,
                  chunk: int = 250_000) -> tuple[float, float]:
    """Monte-Carlo BEV IoU by point sampling; returns (estimate, standard error)."""
    if samples < 10**5:
        raise ValueError("use at least 1e5 samples")
    ea, eb = _extent(a), _extent(b)
    x0, x1 = min(ea[0], eb[0]), max(ea[1], eb[1])
    y0, y1 = min(ea[2], eb[2]), max(ea[3], eb[3])
    rng = np.random.default_rng(seed)
    n_inter = n_union = 0
    left = samples
    while left > 0:
        n = min(chunk, left)
        pts = np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
        ia, ib = _inside(pts, a), _inside(pts, b)
        n_inter += int(np.count_nonzero(ia & ib))
        n_union += int(np.count_nonzero(ia | ib))
        left -= n
    if n_union == 0:
        return 0.0, 0.0
    p = n_inter / n_union
    return p, math.sqrt(p * (1 - p) / n_union)
