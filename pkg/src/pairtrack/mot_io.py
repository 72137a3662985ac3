"""Line-based tracking file format: read and write.

Rows are `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z` with boxes
in top-left form on disk and center form in memory. GT files use conf as a
visibility flag (1 visible, 0 not); result files carry detection confidence.
The world-coordinate columns are always -1.
"""

from __future__ import annotations

from pathlib import Path

from .geometry import Box
from .sequences import SequenceGT, SequenceResult


class MotParseError(ValueError):
    pass


def _parse_rows(path: str | Path):
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) < 7:
                raise MotParseError(
                    f"{path}: line {lineno}: expected at least 7 fields, got {len(fields)}"
                )
            try:
                frame = int(fields[0])
                ident = int(fields[1])
                left, top, w, h, conf = (float(v) for v in fields[2:7])
            except ValueError as e:
                raise MotParseError(f"{path}: line {lineno}: {e}") from None
            if w <= 0 or h <= 0:
                raise MotParseError(
                    f"{path}: line {lineno}: non-positive box size {w}x{h}"
                )
            yield frame, ident, Box(left + w / 2, top + h / 2, w, h), conf, lineno


def parse_mot_gt(path: str | Path) -> SequenceGT:
    seq = SequenceGT()
    for frame, ident, box, conf, lineno in _parse_rows(path):
        try:
            seq.add(frame, ident, box, visible=conf > 0)
        except ValueError as e:
            raise MotParseError(f"{path}: line {lineno}: {e}") from None
    return seq


def parse_mot_result(path: str | Path) -> SequenceResult:
    res = SequenceResult()
    for frame, ident, box, conf, _ in _parse_rows(path):
        res.add(frame, ident, box, conf)
    return res


def parse_mot_file(path: str | Path, kind: str = "gt") -> SequenceGT | SequenceResult:
    """Parse a tracking text file as ground truth or tracker output."""
    if kind == "gt":
        return parse_mot_gt(path)
    if kind == "result":
        return parse_mot_result(path)
    raise ValueError(f"kind must be 'gt' or 'result', got {kind!r}")


def _row(frame: int, ident: int, box: Box, conf_text: str) -> str:
    left = box.cx - box.w / 2
    top = box.cy - box.h / 2
    return f"{frame},{ident},{left:.2f},{top:.2f},{box.w:.2f},{box.h:.2f},{conf_text},-1,-1,-1\n"


def write_mot_gt(seq: SequenceGT, path: str | Path) -> None:
    with open(path, "w") as f:
        for frame in seq.frames:
            for e in sorted(seq.entries(frame), key=lambda e: e.identity):
                f.write(_row(frame, e.identity, e.box, "1" if e.visible else "0"))


def write_mot_result(res: SequenceResult, path: str | Path) -> None:
    with open(path, "w") as f:
        for frame in res.frames:
            for e in sorted(res.entries(frame), key=lambda e: e.identity):
                f.write(_row(frame, e.identity, e.box, f"{e.conf:.6f}"))
