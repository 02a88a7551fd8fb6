"""Hot loops: rotated-rectangle overlap and the rectangular assignment solver.

Boxes enter the overlap kernels as rows ``[cx, cy, length, width, yaw]``.
Everything here is written in the numba-compatible subset so the same
source runs compiled or interpreted (see ``_jit``).
"""
import numpy as np

from ._jit import njit

AREA_EPS = 1e-9


@njit
def box_corners(cx, cy, length, width, yaw):
    """Counter-clockwise footprint corners, shape (4, 2)."""
    c = np.cos(yaw)
    s = np.sin(yaw)
    hl = 0.5 * length
    hw = 0.5 * width
    lx = np.array([hl, -hl, -hl, hl])
    ly = np.array([hw, hw, -hw, -hw])
    out = np.empty((4, 2))
    for k in range(4):
        out[k, 0] = cx + c * lx[k] - s * ly[k]
        out[k, 1] = cy + s * lx[k] + c * ly[k]
    return out


@njit
def polygon_area(poly, n):
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        j = (i + 1) % n
        acc += poly[i, 0] * poly[j, 1] - poly[j, 0] * poly[i, 1]
    return 0.5 * acc


@njit
def clip_convex(subject, clip):
    """Sutherland-Hodgman clip of a convex polygon by a CCW convex polygon.

    Returns a (32, 2) buffer and the number of valid vertices.
    """
    cur = np.empty((32, 2))
    nxt = np.empty((32, 2))
    n = subject.shape[0]
    for i in range(n):
        cur[i, 0] = subject[i, 0]
        cur[i, 1] = subject[i, 1]
    m = clip.shape[0]
    for e in range(m):
        if n == 0:
            break
        ax = clip[e, 0]
        ay = clip[e, 1]
        ex = clip[(e + 1) % m, 0] - ax
        ey = clip[(e + 1) % m, 1] - ay
        k = 0
        for i in range(n):
            px = cur[i, 0]
            py = cur[i, 1]
            qx = cur[(i + 1) % n, 0]
            qy = cur[(i + 1) % n, 1]
            sp = ex * (py - ay) - ey * (px - ax)
            sq = ex * (qy - ay) - ey * (qx - ax)
            if sp >= 0.0:
                nxt[k, 0] = px
                nxt[k, 1] = py
                k += 1
            if (sp > 0.0 and sq < 0.0) or (sp < 0.0 and sq > 0.0):
                t = sp / (sp - sq)
                nxt[k, 0] = px + t * (qx - px)
                nxt[k, 1] = py + t * (qy - py)
                k += 1
        for i in range(k):
            cur[i, 0] = nxt[i, 0]
            cur[i, 1] = nxt[i, 1]
        n = k
    return cur, n


@njit
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit
def convex_hull_area(points):
    """Area of the convex hull of a small point set (monotone chain)."""
    n = points.shape[0]
    pts = points.copy()
    # insertion sort by (x, y); n is 8 in practice
    for i in range(1, n):
        x = pts[i, 0]
        y = pts[i, 1]
        j = i - 1
        while j >= 0 and (pts[j, 0] > x or (pts[j, 0] == x and pts[j, 1] > y)):
            pts[j + 1, 0] = pts[j, 0]
            pts[j + 1, 1] = pts[j, 1]
            j -= 1
        pts[j + 1, 0] = x
        pts[j + 1, 1] = y
    hull = np.empty((2 * n + 1, 2))
    k = 0
    for i in range(n):
        while k >= 2 and _cross(hull[k - 2, 0], hull[k - 2, 1], hull[k - 1, 0],
                                hull[k - 1, 1], pts[i, 0], pts[i, 1]) <= 0.0:
            k -= 1
        hull[k, 0] = pts[i, 0]
        hull[k, 1] = pts[i, 1]
        k += 1
    lower = k + 1
    for i in range(n - 2, -1, -1):
        while k >= lower and _cross(hull[k - 2, 0], hull[k - 2, 1], hull[k - 1, 0],
                                    hull[k - 1, 1], pts[i, 0], pts[i, 1]) <= 0.0:
            k -= 1
        hull[k, 0] = pts[i, 0]
        hull[k, 1] = pts[i, 1]
        k += 1
    # last point repeats the first
    return polygon_area(hull, k - 1)


@njit
def bev_overlap(a, b):
    """(intersection, union, hull) areas of two footprints."""
    ca = box_corners(a[0], a[1], a[2], a[3], a[4])
    cb = box_corners(b[0], b[1], b[2], b[3], b[4])
    poly, n = clip_convex(ca, cb)
    inter = polygon_area(poly, n)
    if inter < AREA_EPS:
        inter = 0.0
    area_a = a[2] * a[3]
    area_b = b[2] * b[3]
    union = area_a + area_b - inter
    allpts = np.empty((8, 2))
    allpts[:4] = ca
    allpts[4:] = cb
    hull = convex_hull_area(allpts)
    if hull < union:
        hull = union
    return inter, union, hull


@njit
def pairwise_bev(boxes_a, boxes_b):
    """IoU and GIoU matrices between two (N, 5) / (M, 5) box arrays."""
    na = boxes_a.shape[0]
    nb = boxes_b.shape[0]
    iou = np.zeros((na, nb))
    giou = np.zeros((na, nb))
    for i in range(na):
        for j in range(nb):
            inter, union, hull = bev_overlap(boxes_a[i], boxes_b[j])
            v = inter / union
            if v > 1.0:
                v = 1.0
            iou[i, j] = v
            giou[i, j] = v - (hull - union) / hull
    return iou, giou


@njit
def solve_rows_le_cols(cost):
    """Minimum-cost assignment of every row to a distinct column.

    Shortest augmenting path with dual potentials, O(n^2 m). Requires
    n_rows <= n_cols and finite costs; returns the column of each row.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    minv = np.empty(m + 1)
    used = np.zeros(m + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = np.inf
            used[j] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    col_of_row = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row
