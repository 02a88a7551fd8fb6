"""Track-to-detection similarity and the assignment solvers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .geometry import pairwise_iou_giou
from .model import IDX_H, IDX_L, Box3D, Track
from .motion import IllConditionedError, KalmanModel, innovation, innovation_cov, lom_distance

log = logging.getLogger(__name__)

METRICS = ("iou", "giou", "l2", "lom", "maha", "a_ll", "apc")
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SimilarityConfig:
    metric: str = "iou"
    iou_gate: float = 0.1
    giou_gate: float = -0.5
    center_gate: dict = field(
        default_factory=lambda: {"car": 4.0, "cyclist": 2.0, "pedestrian": 1.0}
    )
    maha_gate: float = 11.0
    p_d: float = 0.9
    per_detection_pd: bool = False
    all_printed_sign: bool = False
    apc_weights: tuple = (1.0, 1.0, 1.0)
    pcgda_r_min: dict = field(
        default_factory=lambda: {"car": 2.0, "cyclist": 1.5, "pedestrian": 1.5}
    )
    pcgda_r_max: dict = field(
        default_factory=lambda: {"car": 5.0, "cyclist": 3.5, "pedestrian": 2.5}
    )
    class_gate: bool = True

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown similarity metric {self.metric!r}; expected one of {METRICS}")
        if not 0.0 < self.p_d <= 1.0:
            raise ValueError("p_d must lie in (0, 1]")


@dataclass
class SimilarityMatrix:
    costs: np.ndarray
    gate_mask: np.ndarray
    metric_tag: str
    center_dist: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


@dataclass
class Assignment:
    matches: list = field(default_factory=list)
    unmatched_tracks: list = field(default_factory=list)
    unmatched_detections: list = field(default_factory=list)

    @classmethod
    def from_matches(cls, matches, n_tracks: int, n_dets: int) -> "Assignment":
        matches = sorted(matches)
        used_t = {i for i, _ in matches}
        used_d = {j for _, j in matches}
        return cls(
            matches=matches,
            unmatched_tracks=[i for i in range(n_tracks) if i not in used_t],
            unmatched_detections=[j for j in range(n_dets) if j not in used_d],
        )

    def total_cost(self, costs: np.ndarray) -> float:
        return math.fsum(costs[i, j] for i, j in self.matches)


# -- probabilistic distances -------------------------------------------------

def _cholesky(S: np.ndarray, who: str = "") -> np.ndarray:
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"singular innovation covariance{who}") from exc


def mahalanobis_from(residual: np.ndarray, S: np.ndarray, who: str = "") -> float:
    L = _cholesky(np.asarray(S, dtype=float), who)
    w = np.linalg.solve(L, np.asarray(residual, dtype=float))
    return float(w @ w)


def log_det(S: np.ndarray, who: str = "") -> float:
    L = _cholesky(np.asarray(S, dtype=float), who)
    return float(2.0 * np.sum(np.log(np.diag(L))))


def all_dist_from(
    residual: np.ndarray, S: np.ndarray, p_d: float, printed_sign: bool = False, who: str = ""
) -> float:
    """Association log-likelihood distance.

    ``printed_sign`` switches the log-determinant term to ln|S^-1|.
    """
    n = len(residual)
    ld = log_det(S, who)
    if printed_sign:
        ld = -ld
    return mahalanobis_from(residual, S, who) + ld + n * LOG_2PI - 2.0 * math.log(p_d)


def mahalanobis_sq(d: Box3D, track: Track, model: KalmanModel) -> float:
    return mahalanobis_from(
        innovation(d, track, model), innovation_cov(track, model), f" for track {track.id}"
    )


def all_dist_sq(
    d: Box3D, track: Track, model: KalmanModel, p_d: float, printed_sign: bool = False
) -> float:
    return all_dist_from(
        innovation(d, track, model),
        innovation_cov(track, model),
        p_d,
        printed_sign,
        f" for track {track.id}",
    )


# -- aggregated pairwise cost ------------------------------------------------

def _cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    return float(1.0 - a @ b / (na * nb))


def apc_cost(
    d: Box3D, track: Track, weights=(1.0, 1.0, 1.0), dt: float = 0.1, speed_eps: float = 0.5
) -> float:
    """Weighted geometry + appearance + motion cost."""
    w_g, w_a, w_m = weights
    m = track.mean
    dims_t = m[IDX_L:IDX_H + 1]
    dims_d = np.array([d.length, d.width, d.height])
    diag = max(math.hypot(dims_t[0], dims_t[1]), 1e-6)
    dist = math.hypot(d.cx - m[0], d.cy - m[1])
    size = float(np.mean(np.abs(dims_d - dims_t) / np.maximum(np.maximum(dims_d, dims_t), 1e-6)))
    geometry = dist / diag + size

    appearance = 0.0
    if d.feature is not None and track.feature is not None:
        appearance = _cosine_distance(d.feature, track.feature)

    ref = track.prev_center if track.prev_center is not None else track.center
    implied = (d.center - ref) / dt
    v_t = track.velocity
    s_t, s_d = float(np.hypot(*v_t)), float(np.hypot(*implied))
    motion = 0.0
    if max(s_t, s_d) >= speed_eps:
        motion = abs(s_t - s_d) / max(s_t, s_d)
        if min(s_t, s_d) >= speed_eps:
            cos = float(v_t @ implied) / (s_t * s_d)
            motion += 0.5 * (1.0 - max(-1.0, min(1.0, cos)))
    return w_g * geometry + w_a * appearance + w_m * motion


# -- similarity matrix -------------------------------------------------------

_warned_lom = False


def build_similarity(
    tracks: Sequence[Track],
    detections: Sequence[Box3D],
    config: SimilarityConfig,
    model: KalmanModel = KalmanModel(),
    dt: float = 0.1,
) -> SimilarityMatrix:
    global _warned_lom
    nt, nd = len(tracks), len(detections)
    metric = config.metric
    costs = np.zeros((nt, nd))
    mask = np.zeros((nt, nd), dtype=bool)
    centers_t = np.array([t.center for t in tracks]).reshape(nt, 2)
    centers_d = np.array([d.center for d in detections]).reshape(nd, 2)
    center_dist = np.linalg.norm(centers_t[:, None, :] - centers_d[None, :, :], axis=-1)
    if nt == 0 or nd == 0:
        return SimilarityMatrix(costs, mask, metric, center_dist)

    radius = np.array([config.center_gate[d.class_id] for d in detections])
    if metric in ("iou", "giou"):
        iou, giou = pairwise_iou_giou([t.to_box() for t in tracks], detections)
        value = iou if metric == "iou" else giou
        gate = config.iou_gate if metric == "iou" else config.giou_gate
        costs = 1.0 - value
        mask = value >= gate
    elif metric == "l2":
        costs = center_dist
        mask = center_dist <= radius[None, :]
    elif metric == "lom":
        for j, d in enumerate(detections):
            if d.velocity is None:
                if not _warned_lom:
                    log.warning("detection without velocity: LoM falls back to KF+CV centers")
                    _warned_lom = True
                costs[:, j] = center_dist[:, j]
            else:
                costs[:, j] = [lom_distance(t, d, dt) for t in tracks]
        mask = costs <= radius[None, :]
    elif metric in ("maha", "a_ll"):
        for i, t in enumerate(tracks):
            S = innovation_cov(t, model)
            who = f" for track {t.id}"
            L = _cholesky(S, who)
            ld = 2.0 * float(np.sum(np.log(np.diag(L))))
            if config.all_printed_sign:
                ld = -ld
            for j, d in enumerate(detections):
                w = np.linalg.solve(L, innovation(d, t, model))
                maha = float(w @ w)
                mask[i, j] = maha <= config.maha_gate
                if metric == "maha":
                    costs[i, j] = maha
                else:
                    p_d = d.score if config.per_detection_pd else config.p_d
                    p_d = min(max(p_d, 1e-6), 1.0)
                    costs[i, j] = maha + ld + len(w) * LOG_2PI - 2.0 * math.log(p_d)
    elif metric == "apc":
        weights = config.apc_weights
        r_max = np.array([config.pcgda_r_max[d.class_id] for d in detections])
        for i, t in enumerate(tracks):
            for j, d in enumerate(detections):
                costs[i, j] = apc_cost(d, t, weights, dt)
        mask = center_dist <= r_max[None, :]

    if config.class_gate:
        same = np.array([[t.class_id == d.class_id for d in detections] for t in tracks])
        mask &= same
    costs = np.asarray(costs, dtype=float).copy()
    costs[~mask] = gate_sentinel(costs, mask)
    return SimilarityMatrix(costs, mask, metric, center_dist)


def gate_sentinel(costs: np.ndarray, mask: np.ndarray) -> float:
    """Cost for gated-out pairs, big enough that a solver never trades an
    admissible match for a cheaper-looking inadmissible one."""
    if not mask.any():
        return 1e6
    adm = costs[mask]
    lo, hi = float(adm.min()), float(adm.max())
    k = min(costs.shape) + 1
    return hi + k * (hi - lo + 1.0) + 1e6


# -- solvers -----------------------------------------------------------------

def solve_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost matching of size min(n, m) on a dense finite matrix."""
    cost = np.ascontiguousarray(cost, dtype=float)
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if n <= m:
        cols = _kernels.solve_rows_le_cols(cost)
        return [(i, int(c)) for i, c in enumerate(cols)]
    rows = _kernels.solve_rows_le_cols(np.ascontiguousarray(cost.T))
    return sorted((int(r), j) for j, r in enumerate(rows))


def hungarian_assign(m: SimilarityMatrix) -> Assignment:
    nt, nd = m.shape
    pairs = [(i, j) for i, j in solve_assignment(m.costs) if m.gate_mask[i, j]]
    return Assignment.from_matches(pairs, nt, nd)


def _greedy(costs: np.ndarray, admissible: np.ndarray) -> list[tuple[int, int]]:
    ii, jj = np.nonzero(admissible)
    order = np.lexsort((jj, ii, costs[ii, jj]))
    used_t, used_d, pairs = set(), set(), []
    for k in order:
        i, j = int(ii[k]), int(jj[k])
        if i in used_t or j in used_d:
            continue
        used_t.add(i)
        used_d.add(j)
        pairs.append((i, j))
    return pairs


def greedy_assign(m: SimilarityMatrix) -> Assignment:
    nt, nd = m.shape
    return Assignment.from_matches(_greedy(m.costs, m.gate_mask), nt, nd)


def linear_radius(score, r_min, r_max):
    return r_min + (r_max - r_min) * (1.0 - score)


def pcgda_assign(
    m: SimilarityMatrix,
    track_scores,
    r_min,
    r_max,
    radius_fn: Callable = linear_radius,
) -> Assignment:
    """Greedy matching inside a confidence-dependent search radius per track.

    ``r_min``/``r_max`` are scalars or per-track arrays.
    """
    nt, nd = m.shape
    scores = np.clip(np.asarray(track_scores, dtype=float).reshape(nt), 0.0, 1.0)
    radius = np.broadcast_to(radius_fn(scores, np.asarray(r_min, float), np.asarray(r_max, float)), (nt,))
    if m.center_dist is None:
        raise ValueError("pcgda_assign needs center distances on the similarity matrix")
    admissible = m.gate_mask & (m.center_dist <= radius[:, None])
    return Assignment.from_matches(_greedy(m.costs, admissible), nt, nd)
