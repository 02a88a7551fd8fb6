"""Five-stage tracking-by-detection pipeline and its named presets."""
from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .association import (
    Assignment,
    SimilarityConfig,
    build_similarity,
    greedy_assign,
    hungarian_assign,
    pcgda_assign,
)
from .geometry import nms_bev
from .lifecycle import (
    TWO_STAGE,
    LifecycleConfig,
    advance,
    rescue_stage,
    split_by_score,
)
from .model import (
    CLASSES,
    CONFIRMED,
    DEAD,
    Box3D,
    EgoPose,
    FrameBundle,
    InitialCovariance,
    SequenceError,
    Track,
    TrackedBox,
    init_track,
)
from .motion import CA, CV, KalmanModel, KalmanNoise, ego_compensate, kf_predict, kf_update

MOTIONS = {"kf_cv": CV, "kf_ca": CA, "lom": CV}
ASSIGNERS = ("hungarian", "greedy", "pcgda")
EGO_MODES = ("provided_poses", "stationary")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    mode: str = "score"
    score_threshold: dict = field(
        default_factory=lambda: {"car": 0.3, "pedestrian": 0.2, "cyclist": 0.2}
    )
    nms_iou: float = 0.1
    nms_floor: float = 0.01


@dataclass(frozen=True)
class PipelineConfig:
    name: str = "custom"
    preprocessing: PreprocessConfig = PreprocessConfig()
    motion: str = "kf_cv"
    similarity: SimilarityConfig = SimilarityConfig()
    assignment: str = "hungarian"
    lifecycle: LifecycleConfig = LifecycleConfig()
    ego_mode: str = "provided_poses"
    frame_period: float = 0.1
    kalman: KalmanNoise = KalmanNoise()
    initial_covariance: InitialCovariance = InitialCovariance()
    rescue_updates_state: bool = True
    emit_raw_detection: bool = False
    emit_predictions: bool = False

    def __post_init__(self):
        if self.preprocessing.mode not in ("score", "nms"):
            raise ConfigError(f"preprocessing.mode must be 'score' or 'nms', got {self.preprocessing.mode!r}")
        if self.motion not in MOTIONS:
            raise ConfigError(f"motion must be one of {tuple(MOTIONS)}, got {self.motion!r}")
        if self.assignment not in ASSIGNERS:
            raise ConfigError(f"assignment must be one of {ASSIGNERS}, got {self.assignment!r}")
        if self.ego_mode not in EGO_MODES:
            raise ConfigError(f"ego_mode must be one of {EGO_MODES}, got {self.ego_mode!r}")
        if self.frame_period <= 0:
            raise ConfigError("frame_period must be positive")
        if self.assignment == "pcgda" and self.similarity.metric in ("iou", "giou"):
            raise ConfigError("pcgda needs a distance-like metric (apc, l2, lom, maha, a_ll)")

    @property
    def kalman_model(self) -> KalmanModel:
        return KalmanModel(MOTIONS[self.motion], self.kalman)


# -- presets -----------------------------------------------------------------

_PRESET_ROWS = {
    #                PCS/NMS   motion    similarity  assignment   lifecycle
    "ab3dmot":     ("score", "kf_cv", "iou", "hungarian", "count_based"),
    "ab3dmot_mh":  ("score", "kf_cv", "maha", "greedy", "count_based"),
    "castrack":    ("score", "kf_ca", "apc", "pcgda", "count_based"),
    "simpletrack": ("nms", "kf_cv", "giou", "hungarian", "two_stage"),
    "centerpoint": ("score", "lom", "lom", "greedy", "count_based"),
}

_TABLE_LABELS = {
    "score": "PCS", "nms": "NMS", "kf_cv": "KF + CV", "kf_ca": "KF + CA", "lom": "LoM + CV",
    "iou": "IoU", "giou": "GIoU", "maha": "Maha", "apc": "APC", "hungarian": "HA",
    "greedy": "Greedy", "pcgda": "PCGDA", "count_based": "CB", "two_stage": "Two Stage",
}

PRESET_NAMES = tuple(_PRESET_ROWS)
PRESET_MAX_AGE = 5


def preset(name: str) -> PipelineConfig:
    if name not in _PRESET_ROWS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}")
    pre, motion, metric, assign, policy = _PRESET_ROWS[name]
    return PipelineConfig(
        name=name,
        preprocessing=PreprocessConfig(mode=pre),
        motion=motion,
        similarity=SimilarityConfig(metric=metric),
        assignment=assign,
        lifecycle=LifecycleConfig(policy=policy, max_age=PRESET_MAX_AGE),
    )


def preset_table() -> list[tuple[str, ...]]:
    rows = []
    for name, (pre, motion, metric, assign, policy) in _PRESET_ROWS.items():
        sim = "L2" if name == "centerpoint" else _TABLE_LABELS[metric]
        rows.append((name, _TABLE_LABELS[pre], _TABLE_LABELS[motion], sim,
                     _TABLE_LABELS[assign], _TABLE_LABELS[policy]))
    return rows


# -- config (de)serialization --------------------------------------------------

def config_to_dict(cfg) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if dataclasses.is_dataclass(v):
            v = config_to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, dict):
            v = dict(v)
        out[f.name] = v
    return out


def _from_dict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {unknown}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        v = data[f.name]
        t = hints[f.name]
        key = f"{where}.{f.name}" if where else f.name
        if dataclasses.is_dataclass(t):
            v = _from_dict(t, v, key)
        elif isinstance(v, list):
            v = tuple(v)
        elif isinstance(v, dict):
            default = getattr(cls(), f.name)
            if isinstance(default, dict):
                bad = sorted(set(v) - set(CLASSES)) if set(default) <= set(CLASSES) else []
                if bad:
                    raise ConfigError(f"{key}: unknown classes {bad}")
                v = {**default, **v}
        kwargs[f.name] = v
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    return _from_dict(PipelineConfig, data, "")


def load_config(path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: PipelineConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=False)


# -- stages ------------------------------------------------------------------

def preprocess(detections: Sequence[Box3D], cfg: PipelineConfig) -> list[Box3D]:
    pre = cfg.preprocessing
    if pre.mode == "score":
        return [d for d in detections if d.score >= pre.score_threshold[d.class_id]]
    kept = [d for d in detections if d.score >= pre.nms_floor]
    out: list[Box3D] = []
    for cls in CLASSES:
        out.extend(nms_bev([d for d in kept if d.class_id == cls], pre.nms_iou))
    return out


@dataclass
class TrackerState:
    tracks: list = field(default_factory=list)
    next_id: int = 1
    last_frame: Optional[int] = None
    last_pose: Optional[EgoPose] = None


def _assign(sim, tracks, cfg: PipelineConfig) -> Assignment:
    if cfg.assignment == "hungarian":
        return hungarian_assign(sim)
    if cfg.assignment == "greedy":
        return greedy_assign(sim)
    sc = cfg.similarity
    r_min = np.array([sc.pcgda_r_min[t.class_id] for t in tracks])
    r_max = np.array([sc.pcgda_r_max[t.class_id] for t in tracks])
    return pcgda_assign(sim, [t.score for t in tracks], r_min, r_max)


def step(state: TrackerState, frame: FrameBundle, cfg: PipelineConfig):
    """Advance the tracker by one frame; returns (new_state, emitted boxes)."""
    idx = frame.frame_index
    if state.last_frame is not None and idx <= state.last_frame:
        raise SequenceError(f"frame {idx} does not follow frame {state.last_frame}")
    model = cfg.kalman_model
    lc = cfg.lifecycle
    dt = cfg.frame_period if state.last_frame is None else (idx - state.last_frame) * cfg.frame_period

    dets = preprocess(frame.detections, cfg)
    tracks = list(state.tracks)
    if cfg.ego_mode == "provided_poses" and state.last_pose is not None:
        tracks = [ego_compensate(t, state.last_pose, frame.ego) for t in tracks]
    tracks = [kf_predict(t, model, dt) for t in tracks]

    high, low = split_by_score(dets, lc)
    sim = build_similarity(tracks, high, cfg.similarity, model, dt)
    assignment = _assign(sim, tracks, cfg)

    new_tracks: dict[int, Track] = {}
    for i, j in assignment.matches:
        t = kf_update(tracks[i], model, high[j])
        new_tracks[i] = advance(t, high[j], lc, idx)

    leftovers = list(assignment.unmatched_tracks)
    if lc.policy == TWO_STAGE and low and leftovers:
        rescue = rescue_stage([tracks[i] for i in leftovers], low, lc, cfg.similarity, model, dt)
        for a, b in rescue.matches:
            i = leftovers[a]
            t = tracks[i]
            if cfg.rescue_updates_state:
                t = kf_update(t, model, low[b])
            new_tracks[i] = advance(t, low[b], lc, idx, rescued=True)
        leftovers = [leftovers[a] for a in rescue.unmatched_tracks]
    for i in leftovers:
        new_tracks[i] = advance(tracks[i], None, lc, idx)

    alive = [new_tracks[i] for i in range(len(tracks)) if new_tracks[i].status != DEAD]
    next_id = state.next_id
    for j in assignment.unmatched_detections:
        t = init_track(high[j], next_id, model.state_dim, cfg.initial_covariance, lc.min_hits)
        alive.append(replace(t, last_advanced=idx))
        next_id += 1

    outputs = []
    for t in alive:
        if t.status != CONFIRMED:
            continue
        if t.misses > 0 and not cfg.emit_predictions:
            continue
        if cfg.emit_raw_detection and t.misses == 0 and t.last_detection is not None:
            box = replace(t.last_detection, score=min(t.score, 1.0))
        else:
            box = t.to_box()
        outputs.append(TrackedBox(idx, t.id, box))
    outputs.sort(key=lambda r: r.track_id)
    return TrackerState(alive, next_id, idx, frame.ego), outputs


def run_sequence(frames: Iterable[FrameBundle], cfg: PipelineConfig) -> list[TrackedBox]:
    state = TrackerState()
    results: list[TrackedBox] = []
    for frame in frames:
        state, out = step(state, frame, cfg)
        results.extend(out)
    results.sort(key=lambda r: (r.frame_index, r.track_id))
    return results
