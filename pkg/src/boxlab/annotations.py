"""Plain-text annotation formats and CSV writers.

Ground truth:  ``image_id,class_id,x1,y1,x2,y2``
Detections:    ``image_id,class_id,score,x1,y1,x2,y2``

UTF-8, comma separated, no header.  Blank lines and lines starting with
``#`` are ignored.  Any malformed line raises :class:`AnnotationError`
carrying its 1-based line number.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import AnnotationError, BoxLabError
from .evaluation import Detection, EvalReport, GroundTruth
from .geometry import box_from_corners

TRACE_HEADER = ("step", "cx", "cy", "w", "h", "loss", "iou")
REPORT_HEADER = ("class_id", "precision", "recall", "f1", "ap50", "ap5095")
PR_HEADER = ("class_id", "recall", "precision")


class AnnotationRecord(NamedTuple):
    lineno: int
    image_id: str
    class_id: int
    score: float | None
    x1: float
    y1: float
    x2: float
    y2: float


def fmt(x) -> str:
    """Shortest round-trip decimal for floats, plain ``str`` otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _number(tok: str, what: str, lineno: int, source: str | None) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise AnnotationError(f"{what} is not a number: {tok!r}", lineno, source) from None
    if not math.isfinite(v):
        raise AnnotationError(f"{what} is not finite: {tok!r}", lineno, source)
    return v


def _parse_line(line: str, lineno: int, with_score: bool, source: str | None) -> AnnotationRecord:
    fields = [f.strip() for f in line.split(",")]
    expected = 7 if with_score else 6
    if len(fields) != expected:
        raise AnnotationError(f"expected {expected} fields, got {len(fields)}", lineno, source)
    image_id = fields[0]
    if not image_id:
        raise AnnotationError("empty image_id", lineno, source)
    try:
        class_id = int(fields[1])
    except ValueError:
        raise AnnotationError(f"class_id is not an integer: {fields[1]!r}", lineno, source) from None
    if class_id < 0:
        raise AnnotationError(f"class_id must be >= 0, got {class_id}", lineno, source)
    score = None
    rest = fields[2:]
    if with_score:
        score = _number(fields[2], "score", lineno, source)
        if not (0.0 <= score <= 1.0):
            raise AnnotationError(f"score must lie in [0, 1], got {score}", lineno, source)
        rest = fields[3:]
    x1, y1, x2, y2 = (_number(t, n, lineno, source) for t, n in zip(rest, ("x1", "y1", "x2", "y2")))
    if not (x1 < x2 and y1 < y2):
        raise AnnotationError(f"need x1 < x2 and y1 < y2, got ({x1}, {y1}, {x2}, {y2})", lineno, source)
    return AnnotationRecord(lineno, image_id, class_id, score, x1, y1, x2, y2)


def parse_records(text: str, with_score: bool, source: str | None = None) -> list[AnnotationRecord]:
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        records.append(_parse_line(line, lineno, with_score, source))
    return records


def _read(path) -> tuple[str, str]:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8"), str(path)
    except UnicodeDecodeError as err:
        raise AnnotationError(f"not valid UTF-8: {err}", None, str(path)) from None


def _to_box(rec: AnnotationRecord, source):
    try:
        return box_from_corners(rec.x1, rec.y1, rec.x2, rec.y2)
    except BoxLabError as err:
        raise AnnotationError(str(err), rec.lineno, source) from None


def parse_ground_truth(text: str, source: str | None = None) -> list[GroundTruth]:
    return [GroundTruth(r.image_id, r.class_id, _to_box(r, source))
            for r in parse_records(text, with_score=False, source=source)]


def parse_detections(text: str, source: str | None = None) -> list[Detection]:
    return [Detection(r.image_id, r.class_id, r.score, _to_box(r, source))
            for r in parse_records(text, with_score=True, source=source)]


def load_ground_truth(path) -> list[GroundTruth]:
    return parse_ground_truth(*_read(path))


def load_detections(path) -> list[Detection]:
    return parse_detections(*_read(path))


def format_ground_truth(gts: Iterable[GroundTruth]) -> str:
    return "".join(
        ",".join([g.image_id, str(g.class_id), *map(fmt, g.box.corners)]) + "\n" for g in gts
    )


def format_detections(dets: Iterable[Detection]) -> str:
    return "".join(
        ",".join([d.image_id, str(d.class_id), fmt(d.score), *map(fmt, d.box.corners)]) + "\n"
        for d in dets
    )


def _write_csv(path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_trace_csv(path, trace) -> None:
    _write_csv(path, TRACE_HEADER, (
        (s.step, *s.box.params, s.loss, s.iou) for s in trace.steps
    ))


def report_rows(report: EvalReport) -> list[tuple]:
    rows = [(c.class_id, c.precision, c.recall, c.f1, c.ap50, c.ap50_95) for c in report.classes]
    rows.append(("__all__", report.precision, report.recall, report.f1,
                 report.map_50 / 100.0, report.map_50_95 / 100.0))
    return rows


def write_report_csv(path, report: EvalReport) -> None:
    _write_csv(path, REPORT_HEADER, report_rows(report))


def write_pr_csv(path, report: EvalReport) -> None:
    _write_csv(path, PR_HEADER, (
        (c, r, p) for c, pts in sorted(report.pr_curves.items()) for r, p in pts
    ))
