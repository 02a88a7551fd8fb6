"""Track prediction: Kalman CV/CA filter, SE(2) ego compensation, LoM distance."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import (
    IDX_AX,
    IDX_AY,
    IDX_VX,
    IDX_VY,
    IDX_X,
    IDX_Y,
    IDX_YAW,
    OBS_DIM,
    Box3D,
    EgoPose,
    Track,
    normalize_angle,
)

CV = "CV"
CA = "CA"
STATE_DIM = {CV: 9, CA: 11}


class IllConditionedError(np.linalg.LinAlgError):
    """Innovation covariance is not invertible; the Q/R configuration is degenerate."""


@dataclass(frozen=True)
class KalmanNoise:
    q_position: float = 0.01
    q_shape: float = 0.01
    q_velocity: float = 0.1
    q_acceleration: float = 0.5
    r_position: float = 0.1
    r_size: float = 0.1
    r_yaw: float = 0.3


@dataclass(frozen=True)
class KalmanModel:
    kind: str = CV
    noise: KalmanNoise = KalmanNoise()

    def __post_init__(self):
        if self.kind not in STATE_DIM:
            raise ValueError(f"motion kind must be CV or CA, got {self.kind!r}")

    @property
    def state_dim(self) -> int:
        return STATE_DIM[self.kind]

    def A(self, dt: float) -> np.ndarray:
        a = np.eye(self.state_dim)
        a[IDX_X, IDX_VX] = dt
        a[IDX_Y, IDX_VY] = dt
        if self.kind == CA:
            a[IDX_X, IDX_AX] = 0.5 * dt * dt
            a[IDX_Y, IDX_AY] = 0.5 * dt * dt
            a[IDX_VX, IDX_AX] = dt
            a[IDX_VY, IDX_AY] = dt
        return a

    @property
    def H(self) -> np.ndarray:
        h = np.zeros((OBS_DIM, self.state_dim))
        h[:, :OBS_DIM] = np.eye(OBS_DIM)
        return h

    @property
    def Q(self) -> np.ndarray:
        n = self.noise
        diag = np.full(self.state_dim, n.q_shape)
        diag[[0, 1, 2]] = n.q_position
        diag[[IDX_VX, IDX_VY]] = n.q_velocity
        if self.kind == CA:
            diag[[IDX_AX, IDX_AY]] = n.q_acceleration
        return np.diag(diag)

    @property
    def R(self) -> np.ndarray:
        n = self.noise
        diag = np.array([n.r_position] * 3 + [n.r_yaw] + [n.r_size] * 3)
        return np.diag(diag)


def predict_moments(mean, cov, A, Q):
    return A @ mean, A @ cov @ A.T + Q


def kf_predict(track: Track, model: KalmanModel, dt: float) -> Track:
    """Propagate the state mean and covariance by ``dt`` seconds."""
    A = model.A(dt)
    mean, cov = predict_moments(track.mean, track.cov, A, model.Q)
    mean[IDX_YAW] = normalize_angle(mean[IDX_YAW])
    return replace(track, mean=mean, cov=0.5 * (cov + cov.T), prev_center=track.center)


def yaw_residual(measured: float, predicted: float) -> float:
    """Wrapped yaw innovation, folding 180-degree detector flips."""
    r = normalize_angle(measured - predicted)
    if abs(r) > math.pi / 2:
        r = normalize_angle(r + math.pi)
    return r


def innovation(d: Box3D, track: Track, model: KalmanModel) -> np.ndarray:
    r = d.observation() - model.H @ track.mean
    r[IDX_YAW] = yaw_residual(d.yaw, track.mean[IDX_YAW])
    return r


def innovation_cov(track: Track, model: KalmanModel) -> np.ndarray:
    H = model.H
    S = H @ track.cov @ H.T + model.R
    return 0.5 * (S + S.T)


def kalman_update(mean, cov, residual, H, R):
    """Joseph-form update against a precomputed innovation."""
    S = H @ cov @ H.T + R
    S = 0.5 * (S + S.T)
    try:
        cho = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError("innovation covariance is not positive definite") from exc
    # K = cov H^T S^-1 via two triangular solves
    PHt = cov @ H.T
    K = np.linalg.solve(cho.T, np.linalg.solve(cho, PHt.T)).T
    new_mean = mean + K @ residual
    I_KH = np.eye(cov.shape[0]) - K @ H
    new_cov = I_KH @ cov @ I_KH.T + K @ R @ K.T
    return new_mean, 0.5 * (new_cov + new_cov.T)


def kf_update(track: Track, model: KalmanModel, d: Box3D) -> Track:
    mean, cov = kalman_update(
        track.mean, track.cov, innovation(d, track, model), model.H, model.R
    )
    mean[IDX_YAW] = normalize_angle(mean[IDX_YAW])
    feature = d.feature if d.feature is not None else track.feature
    return replace(track, mean=mean, cov=cov, feature=feature, last_detection=d)


def se2_delta(pose_prev: EgoPose, pose_curr: EgoPose) -> tuple[np.ndarray, np.ndarray, float]:
    """Rotation, translation and yaw change mapping prev-ego coordinates to curr-ego."""
    dyaw = pose_prev.yaw - pose_curr.yaw
    c, s = math.cos(dyaw), math.sin(dyaw)
    rot = np.array([[c, -s], [s, c]])
    cc, sc = math.cos(pose_curr.yaw), math.sin(pose_curr.yaw)
    to_curr = np.array([[cc, sc], [-sc, cc]])
    trans = to_curr @ np.array([pose_prev.x - pose_curr.x, pose_prev.y - pose_curr.y])
    return rot, trans, dyaw


def transform_point(p, pose_prev: EgoPose, pose_curr: EgoPose) -> np.ndarray:
    rot, trans, _ = se2_delta(pose_prev, pose_curr)
    return rot @ np.asarray(p, dtype=float) + trans


def ego_compensate(track: Track, pose_prev: EgoPose, pose_curr: EgoPose) -> Track:
    """Re-express a track from the previous ego frame in the current one."""
    if (pose_prev.x, pose_prev.y, pose_prev.yaw) == (pose_curr.x, pose_curr.y, pose_curr.yaw):
        return track
    rot, trans, dyaw = se2_delta(pose_prev, pose_curr)
    n = track.mean.shape[0]
    J = np.eye(n)
    blocks = [(IDX_X, IDX_Y), (IDX_VX, IDX_VY)]
    if n > IDX_AX:
        blocks.append((IDX_AX, IDX_AY))
    for i, j in blocks:
        J[np.ix_([i, j], [i, j])] = rot
    mean = J @ track.mean
    mean[IDX_X:IDX_Y + 1] += trans
    mean[IDX_YAW] = normalize_angle(track.mean[IDX_YAW] + dyaw)
    cov = J @ track.cov @ J.T
    prev = None if track.prev_center is None else rot @ track.prev_center + trans
    return replace(track, mean=mean, cov=0.5 * (cov + cov.T), prev_center=prev)


def lom_distance(track: Track, d: Box3D, dt: float) -> float:
    """Distance from the track's last center to the velocity-back-projected detection."""
    last = track.prev_center if track.prev_center is not None else track.center
    c = d.center
    if d.velocity is not None:
        c = c - np.asarray(d.velocity) * dt
    return float(np.hypot(*(c - last)))


def frame_dt(prev_index: Optional[int], index: int, frame_period: float) -> float:
    if prev_index is None:
        return frame_period
    return (index - prev_index) * frame_period
