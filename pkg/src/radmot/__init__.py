"""Modular tracking-by-detection for oriented 3D boxes."""
from ._jit import USE_NUMBA
from .association import (
    Assignment,
    SimilarityConfig,
    SimilarityMatrix,
    all_dist_sq,
    apc_cost,
    build_similarity,
    greedy_assign,
    hungarian_assign,
    mahalanobis_sq,
    pcgda_assign,
)
from .geometry import giou_bev, iou_3d, iou_bev, l2_center, nms_bev
from .lifecycle import LifecycleConfig, advance, rescue_stage
from .metrics import EvalReport, clear_scores, evaluate, hota_scores, match_sequence
from .model import Box3D, EgoPose, FrameBundle, Track, TrackedBox, init_track, normalize_angle
from .motion import KalmanModel, ego_compensate, kf_predict, kf_update, lom_distance
from .pipeline import PipelineConfig, preset, preprocess, run_sequence, step

__version__ = "0.1.0"
