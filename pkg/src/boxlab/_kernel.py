"""Closed-form IoU-family terms and their gradients.

One implementation serves both the scalar path (plain floats, ``math``) and
the batched path (numpy arrays); the ``ops`` argument supplies min/max/etc.
Gradients are with respect to the predicted ``(cx, cy, w, h)``.

Overlap and enclosing extents are evaluated in center form,
``min(wa, wb, (wa + wb)/2 - |ca - cb|)`` and ``max(wa, wb, (wa + wb)/2 + |ca - cb|)``,
which is exact for identical boxes and independent of translation.  Their
derivatives come from the equivalent corner form.  At an exact min/max tie the
derivative is the mean of the two one-sided branches, which makes the gradient
of every loss exactly zero at ``pred == target``.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-9
ASPECT_K = 4.0 / (math.pi * math.pi)


class _ScalarOps:
    abs = staticmethod(abs)
    minimum = staticmethod(min)
    maximum = staticmethod(max)
    arctan = staticmethod(math.atan)

    @staticmethod
    def sign(x):
        return (x > 0) - (x < 0)

    @staticmethod
    def where(cond, a, b):
        return a if cond else b


class _ArrayOps:
    abs = staticmethod(np.abs)
    minimum = staticmethod(np.minimum)
    maximum = staticmethod(np.maximum)
    arctan = staticmethod(np.arctan)
    sign = staticmethod(np.sign)
    where = staticmethod(np.where)


SCALAR = _ScalarOps()
ARRAY = _ArrayOps()


def _wmin(ops, a, b):
    # d min(a, b) / da
    return 0.5 * (1 + ops.sign(b - a))


def _wmax(ops, a, b):
    # d max(a, b) / da
    return 0.5 * (1 + ops.sign(a - b))


def _quot(num, dnum, den, dden):
    """Value and gradient of num/den given component gradients."""
    q = num / den
    return q, tuple((dn - q * dd) / den for dn, dd in zip(dnum, dden))


def iou_terms(pcx, pcy, pw, ph, tcx, tcy, tw, th, ops=SCALAR, alpha=None):
    """Compute every component needed by the IoU loss family.

    Returns a dict of ``name -> (value, (dcx, dcy, dw, dh))`` for the five
    losses ``iou, giou, diou, ciou, eiou`` plus ``"alpha"`` (the CIoU
    trade-off weight actually used).  Passing ``alpha`` freezes it, which is
    how finite differences reproduce the frozen-alpha CIoU gradient.
    """
    px1, px2 = pcx - 0.5 * pw, pcx + 0.5 * pw
    py1, py2 = pcy - 0.5 * ph, pcy + 0.5 * ph
    tx1, tx2 = tcx - 0.5 * tw, tcx + 0.5 * tw
    ty1, ty2 = tcy - 0.5 * th, tcy + 0.5 * th

    adx = ops.abs(pcx - tcx)
    ady = ops.abs(pcy - tcy)

    # intersection extents
    raw_x = ops.minimum(ops.minimum(pw, tw), 0.5 * (pw + tw) - adx)
    raw_y = ops.minimum(ops.minimum(ph, th), 0.5 * (ph + th) - ady)
    iw = ops.maximum(raw_x, 0.0)
    ih = ops.maximum(raw_y, 0.0)
    kx = _wmax(ops, raw_x, 0.0)
    ky = _wmax(ops, raw_y, 0.0)
    hi_x, lo_x = _wmin(ops, px2, tx2), _wmax(ops, px1, tx1)
    hi_y, lo_y = _wmin(ops, py2, ty2), _wmax(ops, py1, ty1)
    diw_dcx = kx * (hi_x - lo_x)
    diw_dw = kx * 0.5 * (hi_x + lo_x)
    dih_dcy = ky * (hi_y - lo_y)
    dih_dh = ky * 0.5 * (hi_y + lo_y)

    inter = iw * ih
    d_inter = (diw_dcx * ih, dih_dcy * iw, diw_dw * ih, dih_dh * iw)
    union = pw * ph + tw * th - inter
    d_union = (-d_inter[0], -d_inter[1], ph - d_inter[2], pw - d_inter[3])
    iou, d_iou = _quot(inter, d_inter, union, d_union)

    # smallest enclosing box
    cw = ops.maximum(ops.maximum(pw, tw), 0.5 * (pw + tw) + adx)
    ch = ops.maximum(ops.maximum(ph, th), 0.5 * (ph + th) + ady)
    ex_hi, ex_lo = _wmax(ops, px2, tx2), _wmin(ops, px1, tx1)
    ey_hi, ey_lo = _wmax(ops, py2, ty2), _wmin(ops, py1, ty1)
    dcw_dcx = ex_hi - ex_lo
    dcw_dw = 0.5 * (ex_hi + ex_lo)
    dch_dcy = ey_hi - ey_lo
    dch_dh = 0.5 * (ey_hi + ey_lo)

    c_area = cw * ch
    d_c_area = (dcw_dcx * ch, dch_dcy * cw, dcw_dw * ch, dch_dh * cw)
    # (C - U) / C = 1 - U / C
    u_over_c, d_u_over_c = _quot(union, d_union, c_area, d_c_area)
    giou_pen = 1.0 - u_over_c
    d_giou_pen = tuple(-g for g in d_u_over_c)

    # normalized center distance
    dx = pcx - tcx
    dy = pcy - tcy
    cw2 = ops.maximum(cw * cw, EPS)
    ch2 = ops.maximum(ch * ch, EPS)
    d_cw2 = (2 * cw * dcw_dcx, 0.0, 2 * cw * dcw_dw, 0.0)
    d_ch2 = (0.0, 2 * ch * dch_dcy, 0.0, 2 * ch * dch_dh)
    diag2 = ops.maximum(cw * cw + ch * ch, EPS)
    d_diag2 = tuple(a + b for a, b in zip(d_cw2, d_ch2))
    dist_pen, d_dist_pen = _quot(dx * dx + dy * dy, (2 * dx, 2 * dy, 0.0, 0.0), diag2, d_diag2)

    # EIoU width / height terms
    ew = pw - tw
    eh = ph - th
    w_pen, d_w_pen = _quot(ew * ew, (0.0, 0.0, 2 * ew, 0.0), cw2, d_cw2)
    h_pen, d_h_pen = _quot(eh * eh, (0.0, 0.0, 0.0, 2 * eh), ch2, d_ch2)

    # CIoU aspect-ratio term
    diff = ops.arctan(tw / th) - ops.arctan(pw / ph)
    v = ASPECT_K * diff * diff
    r2 = pw * pw + ph * ph
    d_v = (0.0, 0.0, -2 * ASPECT_K * diff * ph / r2, 2 * ASPECT_K * diff * pw / r2)
    if alpha is None:
        den = (1.0 - iou) + v
        pos = den > 0
        alpha = ops.where(pos, v / ops.where(pos, den, 1.0), 0.0)

    base = 1.0 - iou
    d_base = tuple(-g for g in d_iou)
    dist = base + dist_pen
    d_dist = tuple(a + b for a, b in zip(d_base, d_dist_pen))
    return {
        "iou": (base, d_base),
        "giou": (base + giou_pen, tuple(a + b for a, b in zip(d_base, d_giou_pen))),
        "diou": (dist, d_dist),
        "ciou": (dist + alpha * v, tuple(a + alpha * b for a, b in zip(d_dist, d_v))),
        "eiou": (
            dist + w_pen + h_pen,
            tuple(a + b + c for a, b, c in zip(d_dist, d_w_pen, d_h_pen)),
        ),
        "alpha": alpha,
    }
