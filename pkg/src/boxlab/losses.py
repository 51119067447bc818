"""IoU-family box regression losses, the weighted joint loss, BCE and the
composite detection loss.

Every box loss returns a :class:`LossResult` holding the value and the
analytic gradient with respect to the *predicted* box parameters
``(cx, cy, w, h)``; the target is a constant.

The CIoU trade-off weight ``alpha = v / ((1 - IoU) + v)`` is treated as a
constant when differentiating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernel
from .errors import InvalidLabel, InvalidProbability, NonDifferentiablePoint
from .geometry import Box

__all__ = [
    "LossResult",
    "JointWeights",
    "CompositeWeights",
    "LOSS_IDS",
    "loss_iou",
    "loss_giou",
    "loss_diou",
    "loss_ciou",
    "loss_eiou",
    "loss_joint",
    "loss_bce",
    "loss_composite",
    "get_loss",
    "register_loss",
    "batch_loss",
    "grad_check",
    "is_near_nondifferentiable",
]

BCE_EPS = 1e-7
# half-width of the excluded neighbourhood around min/max switch points
NONDIFF_TOL = 1e-3


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: tuple[float, float, float, float]

    @property
    def grad_norm(self) -> float:
        return math.sqrt(sum(g * g for g in self.grad))


def _check_weights(vals, names):
    for n, v in zip(names, vals):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"weight {n} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class JointWeights:
    """Coefficients of the joint loss: CIoU, DIoU, GIoU, EIoU."""

    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 0.1
    eta: float = 0.7

    def __post_init__(self):
        _check_weights(self.as_tuple(), ("alpha", "beta", "gamma", "eta"))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.eta)


@dataclass(frozen=True)
class CompositeWeights:
    """Weights of the classification, objectness and localization losses."""

    lambda_cls: float = 1.0
    lambda_obj: float = 1.0
    lambda_loc: float = 1.0

    def __post_init__(self):
        _check_weights(
            (self.lambda_cls, self.lambda_obj, self.lambda_loc),
            ("lambda_cls", "lambda_obj", "lambda_loc"),
        )


DEFAULT_JOINT = JointWeights()
_BLOCK = 1 << 14


def _terms(pred: Box, target: Box, alpha=None):
    return _kernel.iou_terms(*pred.params, *target.params, alpha=alpha)


def _result(pair) -> LossResult:
    value, grad = pair
    # +0.0 folds negative zeros
    return LossResult(float(value) + 0.0, tuple(float(g) + 0.0 for g in grad))


def _combine(terms, wts: JointWeights):
    """Literal weighted sum of the four component losses."""
    parts = [terms[k] for k in ("ciou", "diou", "giou", "eiou")]
    ws = wts.as_tuple()
    value = sum(w * p[0] for w, p in zip(ws, parts))
    grad = tuple(sum(w * p[1][i] for w, p in zip(ws, parts)) for i in range(4))
    return value, grad


def loss_iou(pred: Box, target: Box) -> LossResult:
    """``1 - IoU``.  The gradient vanishes identically for disjoint boxes."""
    return _result(_terms(pred, target)["iou"])


def loss_giou(pred: Box, target: Box) -> LossResult:
    return _result(_terms(pred, target)["giou"])


def loss_diou(pred: Box, target: Box) -> LossResult:
    return _result(_terms(pred, target)["diou"])


def loss_ciou(pred: Box, target: Box) -> LossResult:
    """DIoU plus ``alpha * v`` aspect-ratio penalty; equals DIoU when aspect ratios match."""
    return _result(_terms(pred, target)["ciou"])


def loss_eiou(pred: Box, target: Box) -> LossResult:
    """``1 - IoU`` plus center, width and height penalties, each normalized by the enclosing box."""
    return _result(_terms(pred, target)["eiou"])


def loss_joint(pred: Box, target: Box, wts: JointWeights = DEFAULT_JOINT) -> LossResult:
    """Weighted sum of the CIoU, DIoU, GIoU and EIoU losses.

    The gradient is the same weighted sum of the component gradients.
    """
    return _result(_combine(_terms(pred, target), wts))


def loss_bce(p: float, y: int) -> float:
    """Binary cross-entropy with ``p`` clamped to ``[1e-7, 1 - 1e-7]``."""
    if not (0.0 <= p <= 1.0):
        raise InvalidProbability(f"probability must lie in [0, 1], got {p}")
    if y not in (0, 1):
        raise InvalidLabel(f"label must be 0 or 1, got {y!r}")
    p = min(max(p, BCE_EPS), 1.0 - BCE_EPS)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def loss_composite(cls: float, obj: float, loc: float,
                   wts: CompositeWeights = CompositeWeights()) -> float:
    for name, v in (("cls", cls), ("obj", obj), ("loc", loc)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} loss must be finite and >= 0, got {v}")
    return wts.lambda_cls * cls + wts.lambda_obj * obj + wts.lambda_loc * loc


# -- registry ----------------------------------------------------------------

LossFn = Callable[[Box, Box], LossResult]

_REGISTRY: dict[str, LossFn] = {
    "iou": loss_iou,
    "giou": loss_giou,
    "diou": loss_diou,
    "ciou": loss_ciou,
    "eiou": loss_eiou,
    "joint": loss_joint,
}
LOSS_IDS: tuple[str, ...] = tuple(_REGISTRY)


def register_loss(name: str, fn: LossFn) -> None:
    """Add a loss under a new lowercase identifier (e.g. a third-party SIoU)."""
    if name != name.lower() or not name:
        raise ValueError(f"loss identifiers are non-empty lowercase strings, got {name!r}")
    if name in _REGISTRY:
        raise ValueError(f"loss {name!r} is already registered")
    _REGISTRY[name] = fn


def get_loss(name: str, wts: JointWeights = DEFAULT_JOINT) -> LossFn:
    try:
        fn = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown loss {name!r}; choose from {', '.join(_REGISTRY)}") from None
    if fn is loss_joint:
        return lambda pred, target: loss_joint(pred, target, wts)
    return fn


def available_losses() -> tuple[str, ...]:
    return tuple(_REGISTRY)


# -- batched evaluation ------------------------------------------------------


def batch_loss(loss_id: str, pred: np.ndarray, target: np.ndarray,
               wts: JointWeights = DEFAULT_JOINT) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a built-in loss over ``(N, 4)`` arrays of ``(cx, cy, w, h)``.

    Returns ``(values, grads)`` with shapes ``(N,)`` and ``(N, 4)``.  Inputs
    are not validated; callers pass positive extents.
    """
    if loss_id not in LOSS_IDS:
        raise KeyError(f"batched evaluation supports {', '.join(LOSS_IDS)}, got {loss_id!r}")
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 4)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 4)
    n = pred.shape[0]
    values = np.empty(n)
    grads = np.empty((n, 4))
    # cache-sized blocks keep the many temporaries out of main memory
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        cols = np.ascontiguousarray(pred[lo:hi].T), np.ascontiguousarray(target[lo:hi].T)
        terms = _kernel.iou_terms(*cols[0], *cols[1], ops=_kernel.ARRAY)
        value, grad = _combine(terms, wts) if loss_id == "joint" else terms[loss_id]
        values[lo:hi] = value
        for i, g in enumerate(grad):
            grads[lo:hi, i] = g
    return values, grads


# -- gradient verification ---------------------------------------------------


def is_near_nondifferentiable(pred: Box, target: Box, tol: float = NONDIFF_TOL) -> bool:
    """True when any pred edge lies within ``tol`` of any target edge on the same axis.

    Every min/max switch of the IoU family (intersection clamping, touching
    boundaries, enclosing-box edges) happens where such a pair of edges meet.
    """
    for p, t in (((pred.x1, pred.x2), (target.x1, target.x2)),
                 ((pred.y1, pred.y2), (target.y1, target.y2))):
        for a in p:
            for b in t:
                if abs(a - b) < tol:
                    return True
    return False


def grad_check(loss_id: str, pred: Box, target: Box, step: float = 1e-6,
               wts: JointWeights = DEFAULT_JOINT) -> float:
    """Max relative error between the analytic gradient and central differences.

    The error per parameter is ``|analytic - numeric| / max(1, |analytic|)``.
    For ``ciou`` and ``joint`` the CIoU weight alpha is frozen at its value
    at ``pred``, matching how the analytic gradient treats it.

    Raises:
        NonDifferentiablePoint: ``pred`` is within 1e-3 of a min/max switch.
    """
    if step <= 0 or not math.isfinite(step):
        raise ValueError(f"step must be positive, got {step}")
    if loss_id not in LOSS_IDS:
        raise KeyError(f"unknown loss {loss_id!r}")
    if is_near_nondifferentiable(pred, target):
        raise NonDifferentiablePoint(f"{pred} vs {target} is near a non-differentiable configuration")

    base = _terms(pred, target)
    alpha = base["alpha"]

    def pick(terms):
        if loss_id == "joint":
            return _combine(terms, wts)
        return terms[loss_id]

    analytic = pick(base)[1]
    params = list(pred.params)
    worst = 0.0
    for i in range(4):
        hi = params.copy()
        lo = params.copy()
        hi[i] += step
        lo[i] -= step
        f_hi = pick(_kernel.iou_terms(*hi, *target.params, alpha=alpha))[0]
        f_lo = pick(_kernel.iou_terms(*lo, *target.params, alpha=alpha))[0]
        numeric = (f_hi - f_lo) / (2 * step)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
