"""CLEAR-MOT and HOTA evaluation of hypothesis tracks against ground truth."""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .association import solve_assignment
from .geometry import iou_3d, pairwise_iou_giou, pairwise_l2
from .model import CLASSES, TrackedBox

ALPHA_SWEEP = tuple(round(0.05 * k, 2) for k in range(1, 20))
MATCH_MODES = ("iou", "iou3d", "center")


class EvalInputError(ValueError):
    pass


@dataclass
class FrameMatch:
    frame_index: int
    pairs: list = field(default_factory=list)  # (gt_id, hyp_id, overlap)
    unmatched_gt: list = field(default_factory=list)
    unmatched_hyp: list = field(default_factory=list)


@dataclass
class ClearScores:
    mota: Optional[float]
    motp: Optional[float]
    ids: int
    fp: int
    fn: int
    num_gt: int
    matches: int


@dataclass
class HotaScores:
    deta: float
    assa: float
    hota: float
    tp: int
    fn: int
    fp: int
    no_tp: bool = False


@dataclass
class ClassReport:
    """Scores for one class (or the aggregate). Percent-valued fields are in [0, 100]."""

    HOTA: float
    DetA: float
    AssA: float
    MOTA: Optional[float]
    MOTP: Optional[float]
    IDS: int
    FP_T: int
    FN_T: int
    num_gt: int
    TP_D: int
    FP_D: int
    FN_D: int
    alpha_curve: Optional[dict] = None


@dataclass
class EvalReport:
    per_class: dict
    overall: ClassReport
    alpha: float
    match: str
    alpha_sweep: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_text(self) -> str:
        head = f"{'class':<12}{'HOTA':>8}{'DetA':>8}{'AssA':>8}{'MOTA':>9}{'MOTP':>8}{'IDS':>6}{'FP_T':>7}{'FN_T':>7}{'num_gt':>8}"
        lines = [f"match={self.match} alpha={self.alpha}" + (" (alpha sweep)" if self.alpha_sweep else ""), head]

        def fmt(v, w):
            return f"{'-':>{w}}" if v is None else f"{v:>{w}.2f}"

        for name, r in list(self.per_class.items()) + [("overall", self.overall)]:
            lines.append(
                f"{name:<12}{fmt(r.HOTA, 8)}{fmt(r.DetA, 8)}{fmt(r.AssA, 8)}{fmt(r.MOTA, 9)}"
                f"{fmt(r.MOTP, 8)}{r.IDS:>6}{r.FP_T:>7}{r.FN_T:>7}{r.num_gt:>8}"
            )
        return "\n".join(lines) + "\n"


def _by_frame(rows: Iterable[TrackedBox], what: str) -> dict[int, list[TrackedBox]]:
    out: dict[int, list[TrackedBox]] = defaultdict(list)
    seen = set()
    for r in rows:
        key = (r.frame_index, r.track_id)
        if key in seen:
            raise EvalInputError(f"duplicate {what} entry for frame {r.frame_index}, id {r.track_id}")
        seen.add(key)
        out[r.frame_index].append(r)
    return out


def _overlap(gts: Sequence[TrackedBox], hyps: Sequence[TrackedBox], alpha: float, mode: str):
    """(similarity matrix, admissibility) for one frame."""
    g = [r.box for r in gts]
    h = [r.box for r in hyps]
    if mode == "iou":
        sim, _ = pairwise_iou_giou(g, h)
        ok = sim >= alpha
    elif mode == "iou3d":
        sim = np.array([[iou_3d(a, b) for b in h] for a in g]).reshape(len(g), len(h))
        ok = sim >= alpha
    elif mode == "center":
        dist = pairwise_l2(g, h)
        sim = np.clip(1.0 - dist / alpha, 0.0, 1.0)
        ok = dist <= alpha
    else:
        raise ValueError(f"unknown match mode {mode!r}")
    return sim, ok


def match_sequence(
    gt: Iterable[TrackedBox],
    hyp: Iterable[TrackedBox],
    alpha: float = 0.5,
    mode: str = "iou",
    continuity: bool = True,
) -> list[FrameMatch]:
    """Per-frame one-to-one GT/hypothesis matching.

    ``alpha`` is the minimum overlap in the IoU modes and the distance cap
    (meters) in center mode, where the reported overlap is 1 - dist/alpha.
    Pairs of different classes never match.
    """
    if mode not in MATCH_MODES:
        raise ValueError(f"match mode must be one of {MATCH_MODES}")
    if mode != "center" and not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1) for IoU matching")
    gt_f = _by_frame(gt, "ground-truth")
    hyp_f = _by_frame(hyp, "hypothesis")
    previous: dict[int, int] = {}
    out = []
    for fi in sorted(set(gt_f) | set(hyp_f)):
        gts = sorted(gt_f.get(fi, []), key=lambda r: r.track_id)
        hyps = sorted(hyp_f.get(fi, []), key=lambda r: r.track_id)
        fm = FrameMatch(fi)
        if gts and hyps:
            sim, ok = _overlap(gts, hyps, alpha, mode)
            same = np.array([[a.box.class_id == b.box.class_id for b in hyps] for a in gts])
            ok &= same
            pairs: list[tuple[int, int]] = []
            if continuity:
                hyp_pos = {r.track_id: k for k, r in enumerate(hyps)}
                for i, r in enumerate(gts):
                    k = hyp_pos.get(previous.get(r.track_id, -1))
                    if k is not None and ok[i, k]:
                        pairs.append((i, k))
            used_g = {i for i, _ in pairs}
            used_h = {k for _, k in pairs}
            rest_g = [i for i in range(len(gts)) if i not in used_g]
            rest_h = [k for k in range(len(hyps)) if k not in used_h]
            if rest_g and rest_h:
                sub_ok = ok[np.ix_(rest_g, rest_h)]
                if sub_ok.any():
                    sub = sim[np.ix_(rest_g, rest_h)]
                    # maximize the number of admissible pairs first, then overlap
                    cost = np.where(sub_ok, 1.0 - sub, 1.0 + 2.0 * (min(sub.shape) + 1))
                    for a, b in solve_assignment(cost):
                        if sub_ok[a, b]:
                            pairs.append((rest_g[a], rest_h[b]))
            for i, k in sorted(pairs):
                fm.pairs.append((gts[i].track_id, hyps[k].track_id, float(sim[i, k])))
                previous[gts[i].track_id] = hyps[k].track_id
            mg = {i for i, _ in pairs}
            mh = {k for _, k in pairs}
            fm.unmatched_gt = [r.track_id for i, r in enumerate(gts) if i not in mg]
            fm.unmatched_hyp = [r.track_id for k, r in enumerate(hyps) if k not in mh]
        else:
            fm.unmatched_gt = [r.track_id for r in gts]
            fm.unmatched_hyp = [r.track_id for r in hyps]
        out.append(fm)
    return out


def clear_scores(matches: Sequence[FrameMatch]) -> ClearScores:
    fp = sum(len(m.unmatched_hyp) for m in matches)
    fn = sum(len(m.unmatched_gt) for m in matches)
    c = sum(len(m.pairs) for m in matches)
    num_gt = c + fn
    last: dict[int, int] = {}
    ids = 0
    overlap_sum = math.fsum(o for m in matches for _, _, o in m.pairs)
    for m in matches:
        for g, h, _ in m.pairs:
            if g in last and last[g] != h:
                ids += 1
            last[g] = h
    mota = None if num_gt == 0 else 1.0 - (fp + fn + ids) / num_gt
    motp = None if c == 0 else 100.0 * overlap_sum / c
    return ClearScores(mota, motp, ids, fp, fn, num_gt, c)


def hota_scores(matches: Sequence[FrameMatch]) -> HotaScores:
    pair_count: Counter = Counter()
    gt_count: Counter = Counter()
    hyp_count: Counter = Counter()
    fp = fn = 0
    for m in matches:
        for g, h, _ in m.pairs:
            pair_count[(g, h)] += 1
            gt_count[g] += 1
            hyp_count[h] += 1
        for g in m.unmatched_gt:
            gt_count[g] += 1
        for h in m.unmatched_hyp:
            hyp_count[h] += 1
        fn += len(m.unmatched_gt)
        fp += len(m.unmatched_hyp)
    tp = sum(pair_count.values())
    denom = tp + fn + fp
    deta = tp / denom if denom else 0.0
    if tp == 0:
        return HotaScores(deta, 0.0, 0.0, tp, fn, fp, no_tp=True)
    acc = []
    for (g, h), tpa in pair_count.items():
        fna = gt_count[g] - tpa
        fpa = hyp_count[h] - tpa
        # every TP carrying this (g, h) pair shares the same ratio
        acc.append(tpa * (tpa / (tpa + fna + fpa)))
    assa = math.fsum(acc) / tp
    return HotaScores(deta, assa, math.sqrt(deta * assa), tp, fn, fp)


def _class_rows(rows: Iterable[TrackedBox], cls: Optional[str]):
    return [r for r in rows if cls is None or r.box.class_id == cls]


def _report_for(gt, hyp, alpha, mode, sweep) -> ClassReport:
    m = match_sequence(gt, hyp, alpha, mode)
    cs = clear_scores(m)
    hs = hota_scores(m)
    curve = None
    hota, deta, assa = hs.hota, hs.deta, hs.assa
    if sweep:
        curve = {}
        for a in ALPHA_SWEEP:
            s = hota_scores(match_sequence(gt, hyp, a, mode))
            curve[f"{a:.2f}"] = {"HOTA": 100 * s.hota, "DetA": 100 * s.deta, "AssA": 100 * s.assa}
        hota = float(np.mean([v["HOTA"] for v in curve.values()])) / 100
        deta = float(np.mean([v["DetA"] for v in curve.values()])) / 100
        assa = float(np.mean([v["AssA"] for v in curve.values()])) / 100
    return ClassReport(
        HOTA=100 * hota, DetA=100 * deta, AssA=100 * assa,
        MOTA=None if cs.mota is None else 100 * cs.mota,
        MOTP=cs.motp, IDS=cs.ids, FP_T=cs.fp, FN_T=cs.fn, num_gt=cs.num_gt,
        TP_D=hs.tp, FP_D=hs.fp, FN_D=hs.fn, alpha_curve=curve,
    )


def evaluate(
    gt: Sequence[TrackedBox],
    hyp: Sequence[TrackedBox],
    alpha: Optional[float] = None,
    match: str = "iou",
    alpha_sweep: bool = False,
) -> EvalReport:
    """Per-class and aggregate scores; sweep mode averages over alpha in 0.05..0.95."""
    if alpha is None:
        alpha = 2.0 if match == "center" else 0.5
    if alpha_sweep and match == "center":
        raise ValueError("alpha sweep is defined for IoU matching only")
    gt = list(gt)
    hyp = list(hyp)
    per_class = {}
    for cls in CLASSES:
        g = _class_rows(gt, cls)
        h = _class_rows(hyp, cls)
        if g or h:
            per_class[cls] = _report_for(g, h, alpha, match, alpha_sweep)
    overall = _report_for(gt, hyp, alpha, match, alpha_sweep)
    return EvalReport(per_class, overall, alpha, match, alpha_sweep)
