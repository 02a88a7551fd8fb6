import numpy as np
import pytest

from radmot.model import Box3D


def make_box(cx=0.0, cy=0.0, length=1.0, width=1.0, yaw=0.0, cls="car", score=1.0,
             cz=0.0, height=1.0, velocity=None, feature=None):
    return Box3D(cx, cy, cz, length, width, height, yaw, cls, score,
                 velocity=velocity, feature=feature)


def random_box(rng, spread=2.0, cls="car"):
    return make_box(
        cx=rng.uniform(-spread, spread), cy=rng.uniform(-spread, spread),
        length=rng.uniform(0.5, 5.0), width=rng.uniform(0.3, 2.5),
        yaw=rng.uniform(-np.pi, np.pi), cls=cls,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def track_rows(spec):
    """TrackedBox rows from {frame: [(id, cx, cy), ...]} with unit car boxes."""
    from radmot.model import TrackedBox
    return [TrackedBox(f, i, make_box(x, y, length=2.0, width=2.0))
            for f, rows in spec.items() for i, x, y in rows]


def metric_fixtures(n=40, seed=7):
    """Seeded (gt, hyp) pairs with up to 5 objects over 20 frames.

    Hypotheses are perturbed copies of the ground truth with dropped boxes,
    id switches, merged ids and clutter tracks.
    """
    from radmot.model import TrackedBox
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        n_obj = int(rng.integers(1, 6))
        n_frames = int(rng.integers(1, 21))
        gt, hyp = [], []
        relabel = {k: k + 1 for k in range(n_obj)}
        for f in range(n_frames):
            if rng.random() < 0.15:
                a, b = rng.integers(0, n_obj, 2)
                relabel[a], relabel[b] = relabel[b], relabel[a]
            if rng.random() < 0.05:
                relabel[int(rng.integers(n_obj))] = int(rng.integers(100, 104))
            used = set()
            for k in range(n_obj):
                if rng.random() < 0.1:
                    continue
                x, y = 6.0 * k + 0.1 * f, 0.0
                gt.append(TrackedBox(f, k + 1, make_box(x, y, length=2.0, width=2.0)))
                hid = relabel[k]
                if rng.random() < 0.15 or hid in used:
                    continue
                used.add(hid)
                jitter = rng.normal(0, 0.4, 2)
                hyp.append(TrackedBox(f, hid, make_box(x + jitter[0], y + jitter[1],
                                                       length=2.0, width=2.0)))
            for c in range(int(rng.poisson(0.5))):
                hyp.append(TrackedBox(f, 200 + c, make_box(rng.uniform(0, 30), rng.uniform(3, 9),
                                                           length=2.0, width=2.0)))
        out.append((gt, hyp))
    return out


def hota_oracle(gt, hyp, matches):
    """Exhaustive DetA/AssA/HOTA from raw rows and per-frame pairs, in exact fractions."""
    from fractions import Fraction
    import math
    pairs = {(m.frame_index, g): h for m in matches for g, h, _ in m.pairs}
    matched_hyp = {(m.frame_index, h): g for m in matches for g, h, _ in m.pairs}
    tps = [(f, g, h) for (f, g), h in pairs.items()]
    tp, fn, fp = len(tps), len(gt) - len(tps), len(hyp) - len(tps)
    deta = Fraction(tp, tp + fn + fp) if tp + fn + fp else Fraction(0)
    if not tps:
        return float(deta), 0.0, 0.0
    total = Fraction(0)
    for _, g, h in tps:
        tpa = fna = fpa = 0
        for r in gt:
            if r.track_id != g:
                continue
            if pairs.get((r.frame_index, g)) == h:
                tpa += 1
            else:
                fna += 1
        for r in hyp:
            if r.track_id == h and matched_hyp.get((r.frame_index, h)) != g:
                fpa += 1
        total += Fraction(tpa, tpa + fna + fpa)
    assa = total / tp
    return float(deta), float(assa), math.sqrt(float(deta) * float(assa))


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
