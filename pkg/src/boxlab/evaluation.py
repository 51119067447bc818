"""Detection scoring: greedy matching, precision/recall/F1, AP, mAP, NMS and FPS.

Protocol
--------
* Matching is per ``(image_id, class_id)`` group.  Detections are visited in
  descending score order (ties keep input order); each one takes the
  still-unmatched ground truth of highest IoU and is a true positive iff that
  IoU reaches the threshold.
* AP is the area under the precision envelope sampled at the 101 recall
  levels ``0, 0.01, ..., 1`` (an 11-point mode exists for cross-checks).
* mAP averages AP over classes that have at least one ground truth.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoGroundTruth, NonFinite, ZeroDuration
from .geometry import Box, boxes_to_array, iou, iou_one_to_many

__all__ = [
    "GroundTruth",
    "Detection",
    "MatchOutcome",
    "ClassReport",
    "EvalReport",
    "COCO_THRESHOLDS",
    "match_detections",
    "precision_recall_f1",
    "prf_from_counts",
    "f1_score",
    "pr_curve",
    "average_precision",
    "mean_ap",
    "evaluate",
    "nms",
    "fps",
]

COCO_THRESHOLDS: tuple[float, ...] = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_IOU_THRESH = 0.5
DEFAULT_CONF_THRESH = 0.25


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_id: int
    box: Box

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    score: float
    box: Box

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if not math.isfinite(self.score):
            raise NonFinite(f"score must be finite, got {self.score}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class MatchOutcome:
    """TP/FP flag per detection (descending score order) and unmatched GT count."""

    detections: tuple[Detection, ...]
    is_tp: tuple[bool, ...]
    fn_count: int
    n_gt: int

    @property
    def tp_count(self) -> int:
        return sum(self.is_tp)

    @property
    def fp_count(self) -> int:
        return len(self.is_tp) - self.tp_count


def _score_order(dets: Sequence[Detection]) -> list[int]:
    # sorted() is stable, so equal scores keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i].score)


def match_detections(dets: Sequence[Detection], gts: Sequence[GroundTruth],
                     iou_thresh: float = DEFAULT_IOU_THRESH) -> MatchOutcome:
    if not (0 < iou_thresh <= 1):
        raise ValueError(f"iou_thresh must lie in (0, 1], got {iou_thresh}")
    pools: dict[tuple[str, int], list[Box]] = defaultdict(list)
    for g in gts:
        pools[(g.image_id, g.class_id)].append(g.box)
    used = {k: [False] * len(v) for k, v in pools.items()}

    ordered = [dets[i] for i in _score_order(dets)]
    flags = []
    for d in ordered:
        key = (d.image_id, d.class_id)
        best, best_j = -1.0, -1
        for j, gbox in enumerate(pools.get(key, ())):
            if used[key][j]:
                continue
            o = iou(d.box, gbox)
            if o > best:
                best, best_j = o, j
        hit = best_j >= 0 and best >= iou_thresh
        if hit:
            used[key][best_j] = True
        flags.append(hit)
    tp = sum(flags)
    return MatchOutcome(tuple(ordered), tuple(flags), len(gts) - tp, len(gts))


def prf_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F1; each is 0 when its denominator is 0."""
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, f1_score(p, r)


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2 * precision * recall / s if s else 0.0


def precision_recall_f1(outcome: MatchOutcome) -> tuple[float, float, float]:
    return prf_from_counts(outcome.tp_count, outcome.fp_count, outcome.fn_count)


def _by_class(items, class_id):
    return [x for x in items if x.class_id == class_id]


def pr_curve(dets: Sequence[Detection], gts: Sequence[GroundTruth], class_id: int,
             iou_thresh: float = DEFAULT_IOU_THRESH):
    """Cumulative ``(tp, fp, n_gt, scores)`` for one class over score-ranked detections."""
    outcome = match_detections(_by_class(dets, class_id), _by_class(gts, class_id), iou_thresh)
    flags = np.array(outcome.is_tp, dtype=np.int64)
    tp = np.cumsum(flags)
    fp = np.cumsum(1 - flags)
    scores = np.array([d.score for d in outcome.detections], dtype=np.float64)
    return tp, fp, outcome.n_gt, scores


def _interpolated_ap(tp: np.ndarray, fp: np.ndarray, n_gt: int, n_levels: int) -> float:
    if n_gt == 0 or tp.size == 0:
        return 0.0
    precision = tp / (tp + fp)
    # envelope: best precision at this recall or beyond
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    steps = n_levels - 1
    samples = []
    for k in range(n_levels):
        # recall >= k / steps, compared in integers to dodge float rounding
        idx = np.searchsorted(tp * steps, k * n_gt, side="left")
        samples.append(float(envelope[idx]) if idx < tp.size else 0.0)
    return math.fsum(samples) / n_levels


_LEVELS = {"101": 101, "11": 11}


def average_precision(dets: Sequence[Detection], gts: Sequence[GroundTruth], class_id: int,
                      iou_thresh: float = DEFAULT_IOU_THRESH, method: str = "101") -> float:
    """Interpolated AP of one class, in [0, 1].  Zero when the class has no GT."""
    if method not in _LEVELS:
        raise ValueError(f"method must be one of {sorted(_LEVELS)}, got {method!r}")
    tp, fp, n_gt, _ = pr_curve(dets, gts, class_id, iou_thresh)
    return _interpolated_ap(tp, fp, n_gt, _LEVELS[method])


def _classes(dets, gts, include_empty: bool) -> list[int]:
    classes = {g.class_id for g in gts}
    if include_empty:
        classes |= {d.class_id for d in dets}
    return sorted(classes)


def mean_ap(dets: Sequence[Detection], gts: Sequence[GroundTruth],
            thresholds: Sequence[float] = COCO_THRESHOLDS, method: str = "101",
            include_empty_classes: bool = False) -> tuple[list[float], float]:
    """mAP (percent) at each IoU threshold and their mean.

    Raises:
        NoGroundTruth: ``gts`` is empty.
    """
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    for t in thresholds:
        if not (0 < t <= 1):
            raise ValueError(f"IoU thresholds must lie in (0, 1], got {t}")
    if not gts:
        raise NoGroundTruth("no ground-truth boxes; mAP is undefined")
    classes = _classes(dets, gts, include_empty_classes)
    per_thresh = []
    for t in thresholds:
        aps = [average_precision(dets, gts, c, t, method) for c in classes]
        per_thresh.append(100.0 * math.fsum(aps) / len(aps))
    return per_thresh, math.fsum(per_thresh) / len(per_thresh)


# -- full report -------------------------------------------------------------


@dataclass(frozen=True)
class ClassReport:
    class_id: int
    precision: float
    recall: float
    f1: float
    ap: dict[float, float]
    ap50: float
    ap50_95: float
    best_f1: float
    best_f1_score: float | None


@dataclass(frozen=True)
class EvalReport:
    """Per-class and aggregate metrics.  ``map_*`` fields are percentages."""

    classes: tuple[ClassReport, ...]
    precision: float
    recall: float
    f1: float
    map_50: float
    map_50_95: float
    map_per_threshold: dict[float, float]
    pr_curves: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    iou_thresh: float = DEFAULT_IOU_THRESH
    conf_thresh: float = DEFAULT_CONF_THRESH


def evaluate(dets: Sequence[Detection], gts: Sequence[GroundTruth],
             iou_thresh: float = DEFAULT_IOU_THRESH,
             conf_thresh: float = DEFAULT_CONF_THRESH,
             thresholds: Sequence[float] = COCO_THRESHOLDS,
             method: str = "101",
             include_empty_classes: bool = False) -> EvalReport:
    """Compute the full report.

    P/R/F1 use detections scoring at least ``conf_thresh`` matched at
    ``iou_thresh``; the aggregate P/R/F1 pool counts over classes.  Each
    class also records the best F1 along its PR curve and the score there.
    """
    if not gts:
        raise NoGroundTruth("no ground-truth boxes; mAP is undefined")
    if 0.5 not in thresholds:
        thresholds = (0.5, *thresholds)
    classes = _classes(dets, gts, include_empty_classes)
    kept = [d for d in dets if d.score >= conf_thresh]

    reports = []
    curves = {}
    tp_all = fp_all = fn_all = 0
    for c in classes:
        out = match_detections(_by_class(kept, c), _by_class(gts, c), iou_thresh)
        tp_all += out.tp_count
        fp_all += out.fp_count
        fn_all += out.fn_count
        p, r, f1 = precision_recall_f1(out)

        tp, fp, n_gt, scores = pr_curve(dets, gts, c, iou_thresh)
        if tp.size and n_gt:
            prec = tp / (tp + fp)
            rec = tp / n_gt
            f1s = np.where(prec + rec > 0, 2 * prec * rec / np.where(prec + rec > 0, prec + rec, 1), 0.0)
            best = int(np.argmax(f1s))
            best_f1, best_score = float(f1s[best]), float(scores[best])
            curves[c] = [(float(a), float(b)) for a, b in zip(rec, prec)]
        else:
            best_f1, best_score = 0.0, None
            curves[c] = []

        ap = {t: average_precision(dets, gts, c, t, method) for t in thresholds}
        coco = [ap[t] for t in COCO_THRESHOLDS if t in ap]
        reports.append(ClassReport(
            class_id=c, precision=p, recall=r, f1=f1, ap=ap, ap50=ap[0.5],
            ap50_95=math.fsum(coco) / len(coco) if coco else float("nan"),
            best_f1=best_f1, best_f1_score=best_score,
        ))

    per_thresh = {t: 100.0 * math.fsum(r.ap[t] for r in reports) / len(reports) for t in thresholds}
    coco_maps = [per_thresh[t] for t in COCO_THRESHOLDS if t in per_thresh]
    p, r, f1 = prf_from_counts(tp_all, fp_all, fn_all)
    return EvalReport(
        classes=tuple(reports),
        precision=p, recall=r, f1=f1,
        map_50=per_thresh[0.5],
        map_50_95=math.fsum(coco_maps) / len(coco_maps) if coco_maps else float("nan"),
        map_per_threshold=per_thresh,
        pr_curves=curves,
        iou_thresh=iou_thresh,
        conf_thresh=conf_thresh,
    )


# -- NMS and throughput ------------------------------------------------------


def _nms_group(dets: Sequence[Detection], idx: list[int], iou_thresh: float) -> list[int]:
    """Indices (into ``dets``) kept from one group; ``idx`` is already score-sorted.

    A kept box is only compared with boxes whose centers lie within reach
    along x; anything farther cannot overlap it at all.
    """
    params = boxes_to_array(dets[i].box for i in idx)
    by_x = np.argsort(params[:, 0], kind="stable")
    cx_sorted = params[by_x, 0]
    # widened slightly so rounding at the window edge never drops a candidate
    reach = 0.5 * (params[:, 2] + params[:, 2].max()) * (1 + 1e-9)
    alive = np.ones(len(idx), dtype=bool)
    keep = []
    for pos, i in enumerate(idx):
        if not alive[pos]:
            continue
        keep.append(i)
        cx = params[pos, 0]
        lo = np.searchsorted(cx_sorted, cx - reach[pos], side="left")
        hi = np.searchsorted(cx_sorted, cx + reach[pos], side="right")
        cand = by_x[lo:hi]
        cand = cand[cand > pos]
        cand = cand[alive[cand]]
        if cand.size:
            ov = iou_one_to_many(dets[i].box, params[cand])
            alive[cand[ov >= iou_thresh]] = False
    return keep


def nms(dets: Sequence[Detection], iou_thresh: float = 0.5) -> list[Detection]:
    """Greedy per-(image, class) non-maximum suppression.

    Keeps the best remaining detection and drops every lower-scored one of
    its group with IoU >= ``iou_thresh``.  Output is sorted by descending
    score, ties in input order.
    """
    if not (0 < iou_thresh <= 1):
        raise ValueError(f"iou_thresh must lie in (0, 1], got {iou_thresh}")
    order = _score_order(dets)
    groups: dict[tuple[str, int], list[int]] = defaultdict(list)
    for i in order:
        groups[(dets[i].image_id, dets[i].class_id)].append(i)
    keep = set()
    for idx in groups.values():
        keep.update(_nms_group(dets, idx, iou_thresh))
    return [dets[i] for i in order if i in keep]


def fps(pre_ms: float, infer_ms: float, nms_ms: float) -> float:
    """Frames per second from per-frame preprocessing, inference and NMS milliseconds."""
    for name, v in (("pre_ms", pre_ms), ("infer_ms", infer_ms), ("nms_ms", nms_ms)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and >= 0, got {v}")
    total = pre_ms + infer_ms + nms_ms
    if total == 0:
        raise ZeroDuration("total frame time is zero")
    return 1000.0 / total
