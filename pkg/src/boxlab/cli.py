"""Command-line front end.

Subcommands: ``gradcheck``, ``regress``, ``eval`` and ``bench``.
Exit status: 0 success, 1 domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    load_detections,
    load_ground_truth,
    parse_detections,
    write_pr_csv,
    write_report_csv,
    write_trace_csv,
)
from .errors import AnnotationError, NoGroundTruth
from .evaluation import COCO_THRESHOLDS, evaluate, fps, nms
from .geometry import box_from_corners
from .losses import LOSS_IDS, JointWeights, batch_loss, grad_check, is_near_nondifferentiable
from .regressor import TRAINING_MOMENTUM, SCENARIOS, CompareError, RegressionConfig, compare_losses
from .rng import DEFAULT_SEED, Lcg64, box_pairs
from .synth import detection_lines

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GRAD_TOL = 1e-4


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------


def _loss_list(text: str) -> list[str]:
    ids = [t.strip() for t in text.split(",") if t.strip()]
    if not ids:
        raise UsageError("--loss needs at least one loss id")
    for lid in ids:
        if lid not in LOSS_IDS:
            raise UsageError(f"unknown loss {lid!r}; choose from {','.join(LOSS_IDS)}")
    return ids


def _floats(text: str, n: int, flag: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{flag} expects {n} comma-separated finite numbers, got {text!r}")
    return vals


def _weights(text: str) -> JointWeights:
    try:
        return JointWeights(*_floats(text, 4, "--weights"))
    except ValueError as err:
        raise UsageError(str(err)) from None


def _unit(value: float, flag: str, allow_zero: bool = False) -> float:
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        raise UsageError(f"{flag} must lie in {'[0' if allow_zero else '(0'}, 1], got {value}")
    return value


def _positive_int(value: int, flag: str) -> int:
    if value < 1:
        raise UsageError(f"{flag} must be >= 1, got {value}")
    return value


def _color() -> bool:
    return sys.stdout.isatty() and "NO_COLOR" not in os.environ


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    if _color():
        line = f"\033[1m{line}\033[0m"
    out = [line]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    losses = _loss_list(args.loss)
    wts = _weights(args.weights)
    n = _positive_int(args.pairs, "--pairs")
    if not args.step > 0:
        raise UsageError(f"--step must be positive, got {args.step}")

    pairs = []
    for pred, target in box_pairs(args.seed):
        if not is_near_nondifferentiable(pred, target):
            pairs.append((pred, target))
            if len(pairs) == n:
                break

    print(f"seed: {args.seed}  pairs: {n}  step: {args.step:g}  tolerance: {GRAD_TOL:g}")
    rows = []
    failure = None
    for lid in losses:
        errs = [grad_check(lid, p, t, args.step, wts) for p, t in pairs]
        worst = int(np.argmax(errs))
        ok = errs[worst] < GRAD_TOL
        rows.append([lid, f"{errs[worst]:.3e}", f"{sum(errs) / n:.3e}", "ok" if ok else "FAIL"])
        if not ok and failure is None:
            failure = (lid, pairs[worst], errs[worst])
    print(_table(["loss", "max_rel_err", "mean_rel_err", "status"], rows))
    if failure:
        lid, (p, t), err = failure
        print(f"gradcheck failed: loss={lid} pred={p} target={t} error={err:.3e}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_regress(args) -> int:
    losses = _loss_list(args.loss)
    wts = _weights(args.weights)
    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario!r}; choose from {','.join(SCENARIOS)}")
    init_c, target_c = SCENARIOS[args.scenario]
    if args.init:
        init_c = _floats(args.init, 4, "--init")
    if args.target:
        target_c = _floats(args.target, 4, "--target")
    try:
        init, target = box_from_corners(*init_c), box_from_corners(*target_c)
        cfg = RegressionConfig(
            weights=wts, lr=args.lr, max_steps=args.steps, stop_iou=args.stop_iou,
            use_momentum=args.momentum is not None,
            momentum=TRAINING_MOMENTUM if args.momentum is None else args.momentum,
        )
    except ValueError as err:
        raise UsageError(str(err)) from None

    out = _out_dir(args.out)
    status = EXIT_OK
    try:
        results = compare_losses(init, target, cfg, losses)
    except CompareError as err:
        results = err.results
        for lid, e in err.errors.items():
            print(f"diverged: loss={lid}: {e}", file=sys.stderr)
        status = EXIT_FAIL

    rows = []
    for lid, trace in results:
        write_trace_csv(out / f"trace_{lid}.csv", trace)
        conv = "" if trace.converged_at is None else str(trace.converged_at)
        final = f"{trace.final_iou:.6f}" if trace.steps else "nan"
        rows.append([lid, conv, final, str(len(trace.steps))])
    print(f"scenario: {args.scenario}  init: {init_c}  target: {target_c}  lr: {args.lr:g}  "
          f"steps: {args.steps}  stop_iou: {args.stop_iou:g}")
    print(_table(["loss", "converged_at", "final_iou", "recorded"], rows))
    return status


def cmd_eval(args) -> int:
    iou_t = _unit(args.iou_thresh, "--iou-thresh")
    conf_t = _unit(args.conf_thresh, "--conf-thresh", allow_zero=True)
    for flag, p in (("--gt", args.gt), ("--det", args.det)):
        if not Path(p).is_file():
            raise UsageError(f"{flag}: no such file {p!r}")
    try:
        gts = load_ground_truth(args.gt)
        dets = load_detections(args.det)
    except AnnotationError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_FAIL

    if args.apply_nms or args.nms is not None:
        dets = nms(dets, _unit(args.nms if args.nms is not None else 0.5, "--nms"))
    try:
        report = evaluate(dets, gts, iou_thresh=iou_t, conf_thresh=conf_t,
                          thresholds=COCO_THRESHOLDS, method=args.ap_method,
                          include_empty_classes=args.include_empty_classes)
    except NoGroundTruth as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL

    out = _out_dir(args.out)
    write_report_csv(out / "report.csv", report)
    write_pr_csv(out / "pr_curves.csv", report)

    rows = [[str(c.class_id), f"{c.precision:.3f}", f"{c.recall:.3f}", f"{c.f1:.3f}",
             f"{100 * c.ap50:.2f}", f"{100 * c.ap50_95:.2f}"] for c in report.classes]
    rows.append(["all", f"{report.precision:.3f}", f"{report.recall:.3f}", f"{report.f1:.3f}",
                 f"{report.map_50:.2f}", f"{report.map_50_95:.2f}"])
    print(f"images: {len({g.image_id for g in gts})}  gts: {len(gts)}  dets: {len(dets)}  "
          f"iou_thresh: {iou_t:g}  conf_thresh: {conf_t:g}")
    print(_table(["class", "P", "R", "F1", "mAP@.5(%)", "mAP@.5:.95(%)"], rows))
    for c in report.classes:
        if c.best_f1_score is not None:
            print(f"class {c.class_id}: max F1 {c.best_f1:.3f} at score >= {c.best_f1_score:g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    n = _positive_int(args.batch, "--batch")
    iters = _positive_int(args.iters, "--iters")
    rng = Lcg64(args.seed)
    texts = [detection_lines(rng, n) for _ in range(iters)]
    wts = _weights(args.weights)

    t_pre, t_inf, t_nms = [], [], []
    for text in texts:
        t0 = time.perf_counter()
        dets = parse_detections(text)
        t1 = time.perf_counter()
        pred = np.array([d.box.params for d in dets])
        target = pred + np.array([0.5, -0.5, 0.25, 0.25])
        t2 = time.perf_counter()
        batch_loss("joint", pred, target, wts)
        t3 = time.perf_counter()
        nms(dets, 0.5)
        t4 = time.perf_counter()
        t_pre.append((t1 - t0) * 1e3)
        t_inf.append((t3 - t2) * 1e3)
        t_nms.append((t4 - t3) * 1e3)

    means = [sum(t) / iters for t in (t_pre, t_inf, t_nms)]
    print("toolkit benchmark: parsing stands in for preprocessing, batched joint-loss evaluation for")
    print("inference, and this package's NMS for NMS. It does not measure any detector network.")
    print(f"seed: {args.seed}  detections/frame: {n}  frames: {iters}")
    rows = [[name, f"{m:.4f}"] for name, m in zip(("preprocess (parse)", "inference (loss)", "nms"), means)]
    print(_table(["phase", "mean_ms"], rows))
    print(f"FPS = 1000 / (P + I + NMS) = {fps(*means):.1f}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxlab", description="IoU-family loss lab and detection evaluator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, loss_default=",".join(LOSS_IDS)):
        p.add_argument("--loss", default=loss_default, help="comma-separated loss ids")
        p.add_argument("--weights", default="0.1,0.1,0.1,0.7",
                       help="joint weights alpha,beta,gamma,eta (CIoU,DIoU,GIoU,EIoU)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    g = sub.add_parser("gradcheck", help="verify analytic gradients against central differences")
    common(g)
    g.add_argument("--pairs", type=int, default=1000, help="number of random box pairs")
    g.add_argument("--step", type=float, default=1e-6)
    g.set_defaults(func=cmd_gradcheck)

    r = sub.add_parser("regress", help="fit a box by gradient descent under each loss")
    common(r)
    r.add_argument("--scenario", default="disjoint", help=f"one of {','.join(SCENARIOS)}")
    r.add_argument("--init", help="x1,y1,x2,y2 of the starting box (overrides scenario)")
    r.add_argument("--target", help="x1,y1,x2,y2 of the target box (overrides scenario)")
    r.add_argument("--lr", type=float, default=0.05)
    r.add_argument("--steps", type=int, default=5000)
    r.add_argument("--stop-iou", type=float, default=0.9)
    r.add_argument("--momentum", type=float, nargs="?", const=TRAINING_MOMENTUM, default=None,
                   help=f"enable heavy-ball momentum (default {TRAINING_MOMENTUM} when given bare)")
    r.add_argument("--out", default=".", help="directory for trace_<loss>.csv files")
    r.set_defaults(func=cmd_regress)

    e = sub.add_parser("eval", help="score detections against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--det", required=True)
    e.add_argument("--iou-thresh", type=float, default=0.5)
    e.add_argument("--conf-thresh", type=float, default=0.25)
    e.add_argument("--nms", type=float, default=None, help="apply NMS at this IoU threshold")
    e.add_argument("--apply-nms", action="store_true", help="apply NMS (threshold 0.5 unless --nms)")
    e.add_argument("--ap-method", choices=("101", "11"), default="101")
    e.add_argument("--include-empty-classes", action="store_true",
                   help="average AP over detection-only classes too (as 0)")
    e.add_argument("--seed", type=int, default=DEFAULT_SEED, help="accepted for uniformity; eval is deterministic")
    e.add_argument("--out", default=".", help="directory for report.csv and pr_curves.csv")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="time parsing, batched loss evaluation and NMS")
    b.add_argument("--batch", type=int, default=100, help="detections per synthetic frame")
    b.add_argument("--iters", type=int, default=100, help="number of frames")
    b.add_argument("--weights", default="0.1,0.1,0.1,0.7")
    b.add_argument("--seed", type=int, default=DEFAULT_SEED)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"{parser.prog} {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
