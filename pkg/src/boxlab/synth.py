"""Seeded synthetic annotations for fixtures and benchmarks."""

from __future__ import annotations

from .evaluation import Detection, GroundTruth
from .geometry import box_from_corners
from .rng import DEFAULT_SEED, Lcg64

IMAGE_SIZE = 100.0


def _r2(x: float) -> float:
    return round(x, 2)


def _random_box(rng: Lcg64, lo: float = 4.0, hi: float = 30.0):
    w = rng.uniform(lo, hi)
    h = rng.uniform(lo, hi)
    x1 = rng.uniform(0.0, IMAGE_SIZE - w)
    y1 = rng.uniform(0.0, IMAGE_SIZE - h)
    return _r2(x1), _r2(y1), _r2(x1 + w), _r2(y1 + h)


def fixture_rows(seed: int = DEFAULT_SEED, n_images: int = 10, n_classes: int = 2,
                 miss_rate: float = 0.15, jitter: float = 0.15):
    """Raw ``(gt_rows, det_rows)`` for a synthetic evaluation set.

    Each image holds 1-4 objects.  Every object is detected with probability
    ``1 - miss_rate`` with corners jittered by up to ``jitter`` of its size;
    each image also gets 0-2 spurious detections.  Coordinates are rounded to
    two decimals so the text files are exact.
    """
    rng = Lcg64(seed)
    gt_rows, det_rows = [], []
    for i in range(n_images):
        image_id = f"img{i:03d}"
        for _ in range(rng.randint(1, 4)):
            cls = rng.randint(0, n_classes - 1)
            x1, y1, x2, y2 = _random_box(rng)
            gt_rows.append((image_id, cls, x1, y1, x2, y2))
            if rng.random() < miss_rate:
                continue
            w, h = x2 - x1, y2 - y1
            jx1 = _r2(x1 + rng.uniform(-jitter, jitter) * w)
            jy1 = _r2(y1 + rng.uniform(-jitter, jitter) * h)
            jx2 = _r2(x2 + rng.uniform(-jitter, jitter) * w)
            jy2 = _r2(y2 + rng.uniform(-jitter, jitter) * h)
            score = _r2(rng.uniform(0.3, 1.0))
            det_rows.append((image_id, cls, score, jx1, jy1, jx2, jy2))
        for _ in range(rng.randint(0, 2)):
            cls = rng.randint(0, n_classes - 1)
            score = _r2(rng.uniform(0.05, 0.8))
            det_rows.append((image_id, cls, score, *_random_box(rng)))
    return gt_rows, det_rows


def rows_to_text(rows) -> str:
    return "".join(",".join(str(v) for v in row) + "\n" for row in rows)


def make_eval_fixture(seed: int = DEFAULT_SEED, n_images: int = 10, **kwargs):
    """Ground truths and detections built from :func:`fixture_rows`."""
    gt_rows, det_rows = fixture_rows(seed, n_images, **kwargs)
    gts = [GroundTruth(r[0], r[1], box_from_corners(*r[2:])) for r in gt_rows]
    dets = [Detection(r[0], r[1], r[2], box_from_corners(*r[3:])) for r in det_rows]
    return gts, dets


def detection_lines(rng: Lcg64, n_dets: int, image_id: str = "frame") -> str:
    """Detection-file text with ``n_dets`` random single-class boxes (benchmark input)."""
    out = []
    for _ in range(n_dets):
        x1, y1, x2, y2 = _random_box(rng)
        out.append(f"{image_id},0,{_r2(rng.random())},{x1},{y1},{x2},{y2}\n")
    return "".join(out)
