import math
import random
from dataclasses import replace

import pytest

from boxlab.errors import DivergedToNonFinite
from boxlab.geometry import Box, box_from_corners as B
from boxlab.losses import get_loss
from boxlab.regressor import (
    SCENARIOS,
    CompareError,
    RegressionConfig,
    compare_losses,
    run_regression,
)

DISJOINT = tuple(B(*c) for c in SCENARIOS["disjoint"])


def test_identity_converges_at_step_zero():
    box = B(0, 0, 2, 2)
    for lid, trace in compare_losses(box, box, RegressionConfig(), ["iou", "giou", "joint"]):
        assert trace.converged_at == 0, lid
        assert len(trace.steps) == 1
        assert trace.final_iou == 1.0


def test_iou_stalls_on_disjoint_pair():
    trace = run_regression(*DISJOINT, RegressionConfig(loss_id="iou", max_steps=200))
    assert trace.converged_at is None
    assert len(trace.steps) == 201
    assert all(s.box == DISJOINT[0] for s in trace.steps)
    assert {s.loss for s in trace.steps} == {1.0}


@pytest.mark.parametrize("lid", ["giou", "diou", "ciou", "eiou", "joint"])
def test_penalized_losses_escape_disjoint(lid):
    trace = run_regression(*DISJOINT, RegressionConfig(loss_id=lid))
    assert trace.converged_at is not None
    assert trace.final_iou >= 0.9


def test_joint_disjoint_golden():
    # frozen from the first audited run
    trace = run_regression(*DISJOINT, RegressionConfig(max_steps=2000))
    assert trace.converged_at == 299
    assert trace.steps[-1].step == 299


def test_runs_are_deterministic():
    cfg = RegressionConfig(loss_id="eiou", max_steps=300)
    a = run_regression(*DISJOINT, cfg)
    b = run_regression(*DISJOINT, cfg)
    assert a == b


def test_step_zero_records_init():
    init, target = B(*SCENARIOS["aspect"][0]), B(*SCENARIOS["aspect"][1])
    trace = run_regression(init, target, RegressionConfig(max_steps=3))
    first = trace.steps[0]
    assert first.step == 0 and first.box == init
    assert first.loss == get_loss("joint")(init, target).value


@pytest.mark.parametrize("lid", ["iou", "giou", "diou", "ciou", "eiou", "joint"])
def test_small_lr_does_not_increase_loss(lid):
    rng = random.Random(11)
    fn = get_loss(lid)
    for _ in range(20):
        # unit box scale
        target = Box(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.8, 1.5), rng.uniform(0.8, 1.5))
        init = Box(target.cx + rng.uniform(-0.2, 0.2), target.cy + rng.uniform(-0.2, 0.2),
                   target.w * rng.uniform(0.8, 1.2), target.h * rng.uniform(0.8, 1.2))
        trace = run_regression(init, target, RegressionConfig(loss_id=lid, lr=0.01, max_steps=50, stop_iou=1.0))
        assert fn(trace.final_box, target).value <= trace.steps[0].loss + 1e-12


def test_extents_stay_positive():
    # a large step would flip w negative without the floor
    init, target = Box(0, 0, 0.2, 0.2), Box(0.05, 0, 0.1, 0.1)
    trace = run_regression(init, target, RegressionConfig(loss_id="eiou", lr=5.0, max_steps=20, stop_iou=1.0))
    assert all(s.box.w > 0 and s.box.h > 0 for s in trace.steps)


def test_momentum_changes_the_path():
    plain = run_regression(*DISJOINT, RegressionConfig(max_steps=2000))
    heavy = run_regression(*DISJOINT, RegressionConfig(max_steps=2000, use_momentum=True, lr=0.005))
    assert heavy.steps != plain.steps
    assert heavy.converged_at is not None


def test_compare_keeps_order():
    ids = ["joint", "iou", "giou"]
    out = compare_losses(*DISJOINT, RegressionConfig(max_steps=100), ids)
    assert [lid for lid, _ in out] == ids


def test_compare_rejects_bad_input():
    with pytest.raises(ValueError):
        compare_losses(*DISJOINT, RegressionConfig(), [])
    with pytest.raises(KeyError):
        compare_losses(*DISJOINT, RegressionConfig(), ["giou", "bogus"])


HUGE_LR = RegressionConfig(lr=1e308, max_steps=5, stop_iou=1.0)
OVERLAP = (Box(0, 0, 1, 1), Box(0.5, 0.2, 1, 1))


def test_divergence_is_reported():
    with pytest.raises(DivergedToNonFinite) as info:
        run_regression(*OVERLAP, replace(HUGE_LR, loss_id="diou"))
    err = info.value
    assert err.loss_id == "diou"
    assert len(err.trace.steps) == 1
    assert err.trace.converged_at is None


def test_compare_finishes_other_runs_before_raising():
    with pytest.raises(CompareError) as info:
        compare_losses(*OVERLAP, HUGE_LR, ["iou", "diou"])
    err = info.value
    assert set(err.errors) == {"diou"}
    assert [lid for lid, _ in err.results] == ["iou", "diou"]
    assert len(err.results[0][1].steps) == 6


@pytest.mark.parametrize("kwargs", [
    {"lr": 0}, {"lr": -1}, {"lr": math.inf}, {"max_steps": 0}, {"max_steps": 1.5},
    {"stop_iou": 0}, {"stop_iou": 1.5}, {"momentum": 1.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RegressionConfig(**kwargs)
