"""Gradient-descent box fitting.

Drives a predicted box toward a fixed target by plain gradient descent on
``(cx, cy, w, h)`` under one loss, recording every step.  Running the same
pair under several losses makes their convergence behaviour comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from .errors import DivergedToNonFinite
from .geometry import Box, iou
from .losses import JointWeights, get_loss

__all__ = [
    "RegressionConfig",
    "TraceStep",
    "RegressionTrace",
    "CompareError",
    "run_regression",
    "compare_losses",
    "TRAINING_MOMENTUM",
    "MIN_EXTENT",
    "SCENARIOS",
]

MIN_EXTENT = 1e-6
# SGD momentum used for detector training; only applied when use_momentum is set
TRAINING_MOMENTUM = 0.937


@dataclass(frozen=True)
class RegressionConfig:
    loss_id: str = "joint"
    weights: JointWeights = field(default_factory=JointWeights)
    lr: float = 0.05
    max_steps: int = 5000
    stop_iou: float = 0.9
    use_momentum: bool = False
    momentum: float = TRAINING_MOMENTUM

    def __post_init__(self):
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise ValueError(f"lr must be positive, got {self.lr}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be an integer >= 1, got {self.max_steps}")
        if not (0 < self.stop_iou <= 1):
            raise ValueError(f"stop_iou must lie in (0, 1], got {self.stop_iou}")
        if not (0 <= self.momentum < 1):
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")


class TraceStep(NamedTuple):
    step: int
    box: Box
    loss: float
    iou: float


@dataclass(frozen=True)
class RegressionTrace:
    steps: tuple[TraceStep, ...]
    converged_at: int | None

    @property
    def final_iou(self) -> float:
        return self.steps[-1].iou

    @property
    def final_box(self) -> Box:
        return self.steps[-1].box


class CompareError(Exception):
    """One or more losses diverged during :func:`compare_losses`.

    ``results`` keeps every run in input order; diverged runs carry the
    partial trace recovered from their error.  ``errors`` maps loss id to
    the original exception.
    """

    def __init__(self, results, errors):
        self.results = results
        self.errors = errors
        super().__init__("diverged: " + ", ".join(errors))


def run_regression(init: Box, target: Box, cfg: RegressionConfig) -> RegressionTrace:
    """Run gradient descent from ``init`` toward ``target``.

    Step 0 records the initial box.  Each later step applies
    ``p <- p - lr * grad`` (optionally with heavy-ball momentum) and floors
    ``w`` and ``h`` at 1e-6.  Stops once IoU reaches ``cfg.stop_iou``.

    Raises:
        DivergedToNonFinite: a parameter became NaN/inf; ``err.trace`` holds
            the steps recorded so far.
    """
    loss_fn = get_loss(cfg.loss_id, cfg.weights)
    params = list(init.params)
    velocity = [0.0, 0.0, 0.0, 0.0]
    steps: list[TraceStep] = []
    box = init
    for k in range(cfg.max_steps + 1):
        res = loss_fn(box, target)
        overlap = iou(box, target)
        if not math.isfinite(res.value) or not all(math.isfinite(g) for g in res.grad):
            raise DivergedToNonFinite(
                f"{cfg.loss_id}: non-finite loss or gradient at step {k}",
                trace=RegressionTrace(tuple(steps), None), loss_id=cfg.loss_id,
            )
        steps.append(TraceStep(k, box, res.value, overlap))
        if overlap >= cfg.stop_iou:
            return RegressionTrace(tuple(steps), k)
        if k == cfg.max_steps:
            break
        if cfg.use_momentum:
            velocity = [cfg.momentum * v + g for v, g in zip(velocity, res.grad)]
            update = velocity
        else:
            update = res.grad
        params = [p - cfg.lr * u for p, u in zip(params, update)]
        if not all(math.isfinite(p) for p in params):
            raise DivergedToNonFinite(
                f"{cfg.loss_id}: parameters became non-finite at step {k + 1}",
                trace=RegressionTrace(tuple(steps), None), loss_id=cfg.loss_id,
            )
        params[2] = max(params[2], MIN_EXTENT)
        params[3] = max(params[3], MIN_EXTENT)
        box = Box(*params)
    return RegressionTrace(tuple(steps), None)


def compare_losses(init: Box, target: Box, cfg_base: RegressionConfig,
                   loss_ids: Sequence[str]) -> list[tuple[str, RegressionTrace]]:
    """Run :func:`run_regression` once per loss with otherwise identical settings.

    Results keep the order of ``loss_ids``.  If any run diverges the others
    still complete and a :class:`CompareError` is raised afterwards.
    """
    if not loss_ids:
        raise ValueError("loss_ids must be non-empty")
    for lid in loss_ids:
        get_loss(lid)  # raises KeyError early for unknown ids
    results: list[tuple[str, RegressionTrace]] = []
    errors: dict[str, DivergedToNonFinite] = {}
    for lid in loss_ids:
        try:
            results.append((lid, run_regression(init, target, replace(cfg_base, loss_id=lid))))
        except DivergedToNonFinite as err:
            errors[lid] = err
            results.append((lid, err.trace))
    if errors:
        raise CompareError(results, errors)
    return results


# Built-in init/target corner pairs for the CLI.  These are this toolkit's
# own test scenarios, not taken from any published protocol.
SCENARIOS: dict[str, tuple[tuple[float, float, float, float], tuple[float, float, float, float]]] = {
    "overlap": ((0.0, 0.0, 2.0, 2.0), (1.0, 1.0, 3.0, 3.0)),
    "disjoint": ((0.0, 0.0, 1.0, 1.0), (3.0, 0.0, 4.0, 1.0)),
    # 8:1 flat box against a 1:8 tall box crossing it
    "aspect": ((-1.0, -0.25, 3.0, 0.25), (0.75, -2.0, 1.25, 2.0)),
    "contain": ((0.5, 0.5, 1.5, 1.5), (0.0, 0.0, 3.0, 3.0)),
}
