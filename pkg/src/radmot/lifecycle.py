"""Track birth/confirmation/death under count-based and two-stage policies."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .association import Assignment, SimilarityConfig, build_similarity, hungarian_assign
from .model import CONFIRMED, DEAD, TENTATIVE, Box3D, Track
from .motion import KalmanModel

COUNT_BASED = "count_based"
TWO_STAGE = "two_stage"
SCORE_DECAY = 0.9


class LifecycleError(RuntimeError):
    pass


@dataclass(frozen=True)
class LifecycleConfig:
    policy: str = COUNT_BASED
    max_age: int = 3
    min_hits: int = 1
    low_score_floor: float = 0.1
    high_score_threshold: float = 0.5

    def __post_init__(self):
        if self.policy not in (COUNT_BASED, TWO_STAGE):
            raise ValueError(f"unknown lifecycle policy {self.policy!r}")
        if self.max_age < 1 or self.min_hits < 1:
            raise ValueError("max_age and min_hits must be >= 1")
        if not 0.0 <= self.low_score_floor < self.high_score_threshold <= 1.0:
            raise ValueError("need 0 <= low_score_floor < high_score_threshold <= 1")


def advance(
    track: Track,
    detection: Optional[Box3D],
    cfg: LifecycleConfig,
    frame_index: int,
    rescued: bool = False,
) -> Track:
    """Apply one frame's outcome: ``detection`` is the match, or None for a miss.

    A rescued match resets the miss counter without counting as a hit.
    """
    if track.status == DEAD:
        raise LifecycleError(f"track {track.id} is dead")
    if track.last_advanced == frame_index:
        raise LifecycleError(f"track {track.id} already advanced in frame {frame_index}")
    if detection is None:
        misses = track.misses + 1
        status = DEAD if misses > cfg.max_age else track.status
        return replace(track, misses=misses, age=track.age + 1, status=status,
                       last_advanced=frame_index)
    hits = track.hits if rescued else track.hits + 1
    status = track.status
    if status == TENTATIVE and hits >= cfg.min_hits:
        status = CONFIRMED
    score = max(track.score * SCORE_DECAY, detection.score)
    return replace(track, hits=hits, misses=0, age=track.age + 1, status=status,
                   score=score, last_advanced=frame_index)


def split_by_score(detections: Sequence[Box3D], cfg: LifecycleConfig):
    """(stage-one detections, low-score rescue band)."""
    if cfg.policy != TWO_STAGE:
        return list(detections), []
    high = [d for d in detections if d.score >= cfg.high_score_threshold]
    low = [d for d in detections
           if cfg.low_score_floor <= d.score < cfg.high_score_threshold]
    return high, low


def rescue_stage(
    unmatched_tracks: Sequence[Track],
    low_score_detections: Sequence[Box3D],
    cfg: LifecycleConfig,
    sim_config: SimilarityConfig,
    model: KalmanModel = KalmanModel(),
    dt: float = 0.1,
    solver: Callable[..., Assignment] = hungarian_assign,
) -> Assignment:
    """Second association pass over stage-one leftover tracks only.

    Indices in the result refer to the two input sequences.
    """
    if cfg.policy != TWO_STAGE:
        raise LifecycleError("rescue_stage requires the two_stage policy")
    band = [d for d in low_score_detections
            if cfg.low_score_floor <= d.score < cfg.high_score_threshold]
    if len(band) != len(low_score_detections):
        raise ValueError("rescue detections must lie in [low_score_floor, high_score_threshold)")
    sim = build_similarity(unmatched_tracks, low_score_detections, sim_config, model, dt)
    return solver(sim)
