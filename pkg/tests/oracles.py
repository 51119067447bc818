"""Independent reference implementations used only by the tests.

None of these call into the code paths they check, except that the metric
oracles reuse ``boxlab.geometry.iou`` (itself checked against the exact and
pixel-grid oracles here) so that protocol comparisons can be exact.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from boxlab.geometry import iou as float_iou


def exact_iou(a, b) -> Fraction:
    """IoU from corner tuples with rational interval arithmetic."""
    ax1, ay1, ax2, ay2 = map(Fraction, a)
    bx1, by1, bx2, by2 = map(Fraction, b)
    ix = max(Fraction(0), min(ax2, bx2) - max(ax1, bx1))
    iy = max(Fraction(0), min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def pixel_grid_areas(a, b, res: float = 0.01):
    """Areas of a∩b, a∪b and the enclosing box by counting lattice cells.

    A cell of side ``res`` counts as inside a box when its center is.
    """
    x0, y0 = min(a[0], b[0]) - res, min(a[1], b[1]) - res
    x_hi, y_hi = max(a[2], b[2]) + res, max(a[3], b[3]) + res
    xs = x0 + (np.arange(int(round((x_hi - x0) / res))) + 0.5) * res
    ys = y0 + (np.arange(int(round((y_hi - y0) / res))) + 0.5) * res

    def mask(box):
        inx = (xs > box[0]) & (xs < box[2])
        iny = (ys > box[1]) & (ys < box[3])
        return iny[:, None] & inx[None, :]

    in_a, in_b = mask(a), mask(b)
    enc = mask((min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])))
    cell = res * res
    return (np.count_nonzero(in_a & in_b) * cell,
            np.count_nonzero(in_a | in_b) * cell,
            np.count_nonzero(enc) * cell)


def pixel_grid_iou(a, b, res: float = 0.01) -> float:
    inter, union, _ = pixel_grid_areas(a, b, res)
    return inter / union


# -- detection protocol references ------------------------------------------


def reference_greedy(dets, gts, thr):
    """Plain-loop greedy matcher: returns TP flags in ranked order and fn count."""
    ranked = sorted(enumerate(dets), key=lambda t: (-t[1].score, t[0]))
    taken = [False] * len(gts)
    flags = []
    for _, d in ranked:
        best, best_j = None, None
        for j, g in enumerate(gts):
            if taken[j] or g.image_id != d.image_id or g.class_id != d.class_id:
                continue
            o = float_iou(d.box, g.box)
            if best is None or o > best:
                best, best_j = o, j
        if best is not None and best >= thr:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags, len(gts) - sum(flags)


def reference_ap(dets, gts, class_id, thr, n_levels=101):
    """Brute-force envelope AP: for every recall level scan every ranking prefix."""
    d = [x for x in dets if x.class_id == class_id]
    g = [x for x in gts if x.class_id == class_id]
    if not g or not d:
        return 0.0
    flags, _ = reference_greedy(d, g, thr)
    prefixes = []
    tp = fp = 0
    for f in flags:
        tp += f
        fp += not f
        prefixes.append((Fraction(tp, len(g)), tp / (tp + fp)))
    steps = n_levels - 1
    samples = []
    for k in range(n_levels):
        level = Fraction(k, steps)
        cands = [p for r, p in prefixes if r >= level]
        samples.append(max(cands) if cands else 0.0)
    return math.fsum(samples) / n_levels


def optimal_tp(dets, gts, thr) -> int:
    """Largest number of det-GT pairs with IoU >= thr under one-to-one assignment,
    by exhaustive search over every assignment."""
    ok = [[g.image_id == d.image_id and g.class_id == d.class_id
           and float_iou(d.box, g.box) >= thr for g in gts] for d in dets]

    def search(i, used):
        if i == len(dets):
            return 0
        best = search(i + 1, used)
        for j in range(len(gts)):
            if ok[i][j] and not used & (1 << j):
                best = max(best, 1 + search(i + 1, used | (1 << j)))
        return best

    return search(0, 0)


def nms_by_enumeration(dets, thr):
    """The unique keep-set S where a box is kept iff no higher-ranked kept box
    of its group overlaps it at IoU >= thr.  Found by checking every subset."""
    ranked = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    rank = {i: r for r, i in enumerate(ranked)}
    solutions = []
    for mask in itertools.product([False, True], repeat=len(dets)):
        keep = {i for i, m in enumerate(mask) if m}
        ok = True
        for i in range(len(dets)):
            blocked = any(
                j in keep and rank[j] < rank[i]
                and dets[j].image_id == dets[i].image_id and dets[j].class_id == dets[i].class_id
                and float_iou(dets[j].box, dets[i].box) >= thr
                for j in range(len(dets))
            )
            if (i in keep) == blocked:
                ok = False
                break
        if ok:
            solutions.append(keep)
    assert len(solutions) == 1, solutions
    return [dets[i] for i in ranked if i in solutions[0]]
