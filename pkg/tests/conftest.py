import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boxlab.geometry import Box, box_from_corners  # noqa: E402

DATA = Path(__file__).parent / "data"


def quarter_box(rng: random.Random, lo: int = -8, hi: int = 8):
    """Corners on the 0.25 lattice within [lo/4, hi/4]."""
    x1, x2 = sorted(rng.sample(range(lo, hi + 1), 2))
    y1, y2 = sorted(rng.sample(range(lo, hi + 1), 2))
    return (x1 / 4, y1 / 4, x2 / 4, y2 / 4)


def random_box(rng: random.Random, span: float = 3.0) -> Box:
    return Box(rng.uniform(-span, span), rng.uniform(-span, span),
               rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0))


def disjoint_pair(rng: random.Random):
    """Boxes separated by a positive gap along x or y."""
    a = random_box(rng)
    gap = rng.uniform(0.05, 2.0)
    w, h = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)
    if rng.random() < 0.5:
        off = rng.uniform(-1, 1)
        b = box_from_corners(a.x2 + gap, a.cy - h / 2 + off, a.x2 + gap + w, a.cy + h / 2 + off)
    else:
        b = box_from_corners(a.cx - w / 2, a.y1 - gap - h, a.cx + w / 2, a.y1 - gap)
    return a, b


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def data_dir():
    return DATA


def random_instance(rng: random.Random, max_dets: int = 5, max_gts: int = 4):
    """Small detection instance over two images and two classes.

    Boxes sit on a coarse lattice near a shared anchor so IoUs spread over
    (0, 1); scores come from a short list so ties are common.
    """
    from boxlab.evaluation import Detection, GroundTruth

    def box():
        x1, y1 = rng.randint(0, 4) / 2, rng.randint(0, 4) / 2
        return box_from_corners(x1, y1, x1 + rng.randint(2, 6) / 2, y1 + rng.randint(2, 6) / 2)

    dets, gts = [], []
    for image in ("a", "b"):
        for cls in (0, 1):
            gts += [GroundTruth(image, cls, box()) for _ in range(rng.randint(0, max_gts))]
            dets += [Detection(image, cls, rng.choice((0.3, 0.5, 0.5, 0.7, 0.9)), box())
                     for _ in range(rng.randint(0, max_dets))]
    rng.shuffle(dets)
    return dets, gts


def normalize_csv(text: str, digits: int = 6) -> list[list[str]]:
    """Parse CSV text, rounding every numeric cell to ``digits`` significant digits."""
    import csv
    import io

    def norm(cell):
        try:
            return f"{float(cell):.{digits}g}"
        except ValueError:
            return cell

    return [[norm(c) for c in row] for row in csv.reader(io.StringIO(text))]
