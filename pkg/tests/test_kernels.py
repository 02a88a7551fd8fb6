"""The compiled and interpreted kernel paths must agree."""
import numpy as np
import pytest

from radmot import _jit, _kernels


def test_flag_consistent():
    assert _jit.USE_NUMBA == (_jit.NUMBA_REQUESTED and _jit.numba is not None)


def test_pairwise_bev_paths_agree(rng):
    a = np.column_stack([rng.uniform(-2, 2, (12, 2)), rng.uniform(0.5, 4, (12, 2)),
                         rng.uniform(-np.pi, np.pi, 12)])
    b = np.column_stack([rng.uniform(-2, 2, (9, 2)), rng.uniform(0.5, 4, (9, 2)),
                         rng.uniform(-np.pi, np.pi, 9)])
    iou_fast, giou_fast = _kernels.pairwise_bev(a, b)
    iou_py, giou_py = _kernels.pairwise_bev.py_func(a, b)
    np.testing.assert_allclose(iou_fast, iou_py, atol=1e-12)
    np.testing.assert_allclose(giou_fast, giou_py, atol=1e-12)


@pytest.mark.parametrize("shape", [(1, 1), (3, 3), (4, 6), (7, 7)])
def test_solver_paths_agree(rng, shape):
    cost = rng.uniform(0, 10, shape)
    fast = _kernels.solve_rows_le_cols(cost)
    slow = _kernels.solve_rows_le_cols.py_func(cost)
    np.testing.assert_array_equal(fast, slow)


def test_hull_area_square():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.8], [1, 0.5], [0, 0]], float)
    assert _kernels.convex_hull_area(pts) == pytest.approx(1.0)
