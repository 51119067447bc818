"""IoU-family box regression losses, gradient-descent box fitting and
detection evaluation metrics."""

from .errors import (
    AnnotationError,
    BoxLabError,
    DegenerateBox,
    DivergedToNonFinite,
    InvalidLabel,
    InvalidProbability,
    NoGroundTruth,
    NonDifferentiablePoint,
    NonFinite,
    ZeroDuration,
)
from .evaluation import (
    COCO_THRESHOLDS,
    Detection,
    EvalReport,
    GroundTruth,
    MatchOutcome,
    average_precision,
    evaluate,
    fps,
    match_detections,
    mean_ap,
    nms,
    precision_recall_f1,
)
from .geometry import Box, BoxPairGeometry, box_from_corners, iou, pair_geometry
from .losses import (
    LOSS_IDS,
    CompositeWeights,
    JointWeights,
    LossResult,
    batch_loss,
    get_loss,
    grad_check,
    loss_bce,
    loss_ciou,
    loss_composite,
    loss_diou,
    loss_eiou,
    loss_giou,
    loss_iou,
    loss_joint,
    register_loss,
)
from .regressor import RegressionConfig, RegressionTrace, compare_losses, run_regression

__version__ = "0.1.0"
