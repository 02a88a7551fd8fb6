import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radmot.model import EgoPose, InitialCovariance, init_track
from radmot.motion import (
    CA,
    CV,
    IllConditionedError,
    KalmanModel,
    KalmanNoise,
    ego_compensate,
    frame_dt,
    kalman_update,
    kf_predict,
    kf_update,
    lom_distance,
    predict_moments,
    transform_point,
    yaw_residual,
)

from conftest import make_box


def _track(box, kind=CV, **kw):
    dim = 9 if kind == CV else 11
    return init_track(box, 1, state_dim=dim, **kw)


def test_cv_predict_moves_by_velocity():
    t = _track(make_box(0.0, 0.0, velocity=(1.0, 2.0)))
    p = kf_predict(t, KalmanModel(CV), 0.5)
    assert p.center == pytest.approx([0.5, 1.0])


def test_ca_predict_uses_acceleration():
    t = _track(make_box(0.0, 0.0, velocity=(1.0, 0.0)), kind=CA)
    t.mean[9] = 2.0
    p = kf_predict(t, KalmanModel(CA), 1.0)
    assert p.mean[0] == pytest.approx(2.0)
    assert p.mean[7] == pytest.approx(3.0)


def test_covariance_propagation_hand_product():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    _, cov = predict_moments(np.zeros(2), np.eye(2), A, np.zeros((2, 2)))
    np.testing.assert_array_equal(cov, [[2.0, 1.0], [1.0, 1.0]])


def test_full_model_pos_vel_block():
    model = KalmanModel(CV, KalmanNoise(q_position=0, q_shape=0, q_velocity=0))
    t = _track(make_box(velocity=(0.0, 0.0)))
    t.cov = np.eye(9)
    p = kf_predict(t, model, 1.0)
    np.testing.assert_allclose(p.cov[np.ix_([0, 7], [0, 7])], [[2.0, 1.0], [1.0, 1.0]])


def test_predict_dt_zero_adds_exactly_q():
    model = KalmanModel(CA)
    t = _track(make_box(1.0, 2.0, yaw=0.3, velocity=(0.5, -1.0)), kind=CA)
    p = kf_predict(t, model, 0.0)
    np.testing.assert_array_equal(p.mean, t.mean)
    np.testing.assert_allclose(p.cov, t.cov + model.Q, rtol=0, atol=1e-15)


def test_scalar_update():
    mean, cov = kalman_update(np.array([0.0]), np.array([[1.0]]), np.array([2.0]),
                              np.array([[1.0]]), np.array([[1.0]]))
    assert mean[0] == pytest.approx(1.0)
    assert cov[0, 0] == pytest.approx(0.5)


def test_update_limits():
    d = make_box(3.0, -1.0, velocity=(0.0, 0.0))
    t = _track(make_box(0.0, 0.0, velocity=(0.0, 0.0)))
    exact = kf_update(t, KalmanModel(CV, KalmanNoise(r_position=1e-12, r_size=1e-12, r_yaw=1e-12)), d)
    assert exact.center == pytest.approx([3.0, -1.0], abs=1e-6)
    vague = kf_update(t, KalmanModel(CV, KalmanNoise(r_position=1e9, r_size=1e9, r_yaw=1e9)), d)
    assert vague.center == pytest.approx([0.0, 0.0], abs=1e-3)


def test_singular_innovation_raises():
    t = _track(make_box())
    t.cov = np.zeros((9, 9))
    model = KalmanModel(CV, KalmanNoise(r_position=0, r_size=0, r_yaw=0))
    with pytest.raises(IllConditionedError):
        kf_update(t, model, make_box(1.0))


def test_yaw_residual_wraps_and_folds():
    assert yaw_residual(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(-0.2)
    # a 180 degree label flip is folded to a small residual
    assert yaw_residual(math.pi + 0.05, 0.0) == pytest.approx(0.05)


@pytest.mark.parametrize("kind", [CV, CA])
def test_mean_semigroup(kind):
    t = _track(make_box(0.25, -0.5, yaw=0.5, velocity=(1.5, -0.75)), kind=kind)
    if kind == CA:
        t.mean[9:11] = (0.5, -0.25)
    model = KalmanModel(kind)
    two = kf_predict(kf_predict(t, model, 0.125), model, 0.125)
    one = kf_predict(t, model, 0.25)
    np.testing.assert_array_equal(two.mean, one.mean)


def test_covariance_stays_symmetric(rng):
    model = KalmanModel(CA)
    t = _track(make_box(velocity=(1.0, 0.0)), kind=CA)
    for _ in range(1000):
        t = kf_predict(t, model, 0.1)
        obs = t.mean[:7] + rng.normal(0, 0.3, 7)
        d = make_box(obs[0], obs[1], cz=obs[2], yaw=obs[3], length=abs(obs[4]) + 0.1,
                     width=abs(obs[5]) + 0.1, height=abs(obs[6]) + 0.1)
        t = kf_update(t, model, d)
        assert np.max(np.abs(t.cov - t.cov.T)) < 1e-9
        assert np.all(np.diag(t.cov) >= 0)


def test_ego_identity():
    t = _track(make_box(5.0, 1.0, velocity=(1.0, 0.0)))
    assert ego_compensate(t, EgoPose(0, 1.0, 2.0, 0.3), EgoPose(1, 1.0, 2.0, 0.3)) is t


def test_ego_translation():
    t = _track(make_box(5.0, 0.0))
    out = ego_compensate(t, EgoPose(0), EgoPose(1, 1.0, 0.0, 0.0))
    assert out.center == pytest.approx([4.0, 0.0])


def test_ego_rotation():
    t = _track(make_box(1.0, 0.0, yaw=0.0, velocity=(1.0, 0.0)))
    out = ego_compensate(t, EgoPose(0), EgoPose(1, 0.0, 0.0, math.pi / 2))
    assert out.center == pytest.approx([0.0, -1.0], abs=1e-12)
    assert out.mean[3] == pytest.approx(-math.pi / 2)
    assert out.velocity == pytest.approx([0.0, -1.0], abs=1e-12)
    assert out.mean[2] == t.mean[2]


def test_ego_covariance_rotates():
    t = _track(make_box())
    t.cov[0, 0], t.cov[1, 1] = 4.0, 1.0
    out = ego_compensate(t, EgoPose(0), EgoPose(1, 0.0, 0.0, math.pi / 2))
    assert out.cov[0, 0] == pytest.approx(1.0)
    assert out.cov[1, 1] == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stationary_world_object_is_constant(seed):
    rng = np.random.default_rng(seed)
    world = rng.uniform(-20, 20, 2)
    poses, x, y, yaw = [], 0.0, 0.0, 0.0
    for f in range(20):
        poses.append(EgoPose(f, x, y, yaw))
        x += rng.uniform(-2, 2)
        y += rng.uniform(-2, 2)
        yaw += rng.uniform(-0.3, 0.3)

    def to_ego(p, pose):
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        dx, dy = p[0] - pose.x, p[1] - pose.y
        return np.array([c * dx + s * dy, -s * dx + c * dy])

    def to_world(p, pose):
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        return np.array([pose.x + c * p[0] - s * p[1], pose.y + s * p[0] + c * p[1]])

    e = to_ego(world, poses[0])
    t = _track(make_box(e[0], e[1], velocity=(0.0, 0.0)))
    for prev, curr in zip(poses, poses[1:]):
        t = ego_compensate(t, prev, curr)
        np.testing.assert_allclose(to_world(t.center, curr), world, atol=1e-9)
        np.testing.assert_allclose(transform_point(to_ego(world, prev), prev, curr),
                                   to_ego(world, curr), atol=1e-9)


def test_lom_examples():
    t = _track(make_box(0.0, 0.0))
    assert lom_distance(t, make_box(1.0, 0.0, velocity=(1.0, 0.0)), 1.0) == pytest.approx(0.0)
    assert lom_distance(t, make_box(2.0, 0.0, velocity=(1.0, 0.0)), 1.0) == pytest.approx(1.0)
    d = make_box(3.0, 4.0, velocity=(0.0, 0.0))
    assert lom_distance(t, d, 1.0) == pytest.approx(5.0)
    assert lom_distance(t, make_box(3.0, 4.0), 1.0) == pytest.approx(5.0)


def test_lom_uses_pre_prediction_center():
    t = _track(make_box(0.0, 0.0, velocity=(1.0, 0.0)))
    p = kf_predict(t, KalmanModel(CV), 1.0)
    assert lom_distance(p, make_box(1.0, 0.0, velocity=(1.0, 0.0)), 1.0) == pytest.approx(0.0)


def test_frame_dt():
    assert frame_dt(None, 5, 0.1) == 0.1
    assert frame_dt(3, 5, 0.1) == pytest.approx(0.2)


def test_initial_covariance_shape():
    m = InitialCovariance().matrix(11)
    assert m.shape == (11, 11)
    assert np.all(np.diag(m) > 0)
