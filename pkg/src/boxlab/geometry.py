"""Axis-aligned box algebra.

Boxes live in continuous coordinates and are parameterized by center and
extent ``(cx, cy, w, h)``.  Area is exactly ``w * h`` (no "+1 pixel"
convention), so union/intersection identities hold without fudge terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBox, NonFinite

__all__ = [
    "Box",
    "BoxPairGeometry",
    "box_from_corners",
    "pair_geometry",
    "iou",
    "boxes_to_array",
    "iou_one_to_many",
]


@dataclass(frozen=True)
class Box:
    """Immutable axis-aligned rectangle in center/extent form."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise NonFinite(f"non-finite box parameters {vals}")
        if self.w <= 0 or self.h <= 0:
            raise DegenerateBox(f"box extents must be positive, got w={self.w}, h={self.h}")

    @property
    def x1(self) -> float:
        return self.cx - 0.5 * self.w

    @property
    def x2(self) -> float:
        return self.cx + 0.5 * self.w

    @property
    def y1(self) -> float:
        return self.cy - 0.5 * self.h

    @property
    def y2(self) -> float:
        return self.cy + 0.5 * self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def corners(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def params(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.cx + dx, self.cy + dy, self.w, self.h)

    def scale(self, s: float) -> "Box":
        """Scale about the origin."""
        return Box(self.cx * s, self.cy * s, self.w * s, self.h * s)


@dataclass(frozen=True)
class BoxPairGeometry:
    intersection_area: float
    union_area: float
    enclosing_w: float
    enclosing_h: float
    enclosing_area: float
    center_dist_sq: float
    enclosing_diag_sq: float


def box_from_corners(x1: float, y1: float, x2: float, y2: float) -> Box:
    """Build a :class:`Box` from its top-left and bottom-right corners.

    Raises:
        NonFinite: any corner is NaN or infinite.
        DegenerateBox: ``x1 >= x2`` or ``y1 >= y2``.
    """
    vals = (x1, y1, x2, y2)
    if not all(math.isfinite(v) for v in vals):
        raise NonFinite(f"non-finite corners {vals}")
    if x1 >= x2 or y1 >= y2:
        raise DegenerateBox(f"corners ({x1}, {y1}, {x2}, {y2}) have non-positive extent")
    return Box(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1)


# Extents along one axis from centers and widths.  Equivalent to the corner
# formulas but exact for identical boxes and invariant under translation.


def _overlap(ca: float, wa: float, cb: float, wb: float) -> float:
    return max(0.0, min(min(wa, wb), 0.5 * (wa + wb) - abs(ca - cb)))


def _span(ca: float, wa: float, cb: float, wb: float) -> float:
    return max(max(wa, wb), 0.5 * (wa + wb) + abs(ca - cb))


def _intersection(a: Box, b: Box) -> float:
    return _overlap(a.cx, a.w, b.cx, b.w) * _overlap(a.cy, a.h, b.cy, b.h)


def pair_geometry(a: Box, b: Box) -> BoxPairGeometry:
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    ew = _span(a.cx, a.w, b.cx, b.w)
    eh = _span(a.cy, a.h, b.cy, b.h)
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    return BoxPairGeometry(
        intersection_area=inter,
        union_area=union,
        enclosing_w=ew,
        enclosing_h=eh,
        enclosing_area=ew * eh,
        center_dist_sq=dx * dx + dy * dy,
        enclosing_diag_sq=ew * ew + eh * eh,
    )


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = _intersection(a, b)
    return inter / (a.area + b.area - inter)


# -- array helpers (used by batched losses and NMS) --------------------------


def boxes_to_array(boxes) -> np.ndarray:
    """Stack boxes into an ``(N, 4)`` float64 array of ``(cx, cy, w, h)``."""
    arr = np.array([b.params for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def iou_one_to_many(box: Box, params: np.ndarray) -> np.ndarray:
    """IoU of ``box`` against an ``(N, 4)`` array of ``(cx, cy, w, h)``.

    Same operation order as :func:`iou`, so results agree bit-for-bit.
    """
    cx, cy, w, h = params.T
    iw = np.maximum(0.0, np.minimum(np.minimum(box.w, w), 0.5 * (box.w + w) - np.abs(box.cx - cx)))
    ih = np.maximum(0.0, np.minimum(np.minimum(box.h, h), 0.5 * (box.h + h) - np.abs(box.cy - cy)))
    inter = iw * ih
    return inter / (box.area + w * h - inter)
