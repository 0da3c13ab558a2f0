"""Cough annotation tracks: tab-separated ``start<TAB>end<TAB>cough`` lines."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class LabelTrack:
    """Non-overlapping cough segments in seconds, sorted by start time."""

    segments: tuple[tuple[float, float], ...] = ()
    recording_id: str = ""

    @classmethod
    def from_segments(cls, segments, recording_id: str = "") -> "LabelTrack":
        cleaned = []
        for start, end in segments:
            start, end = float(start), float(end)
            if not (0.0 <= start < end):
                raise LabelError(f"invalid segment [{start}, {end})")
            cleaned.append((start, end))
        return cls(tuple(merge_overlaps(cleaned)), recording_id)

    def frame_labels(self, centres: np.ndarray) -> np.ndarray:
        """1 for every time in ``centres`` that falls inside a segment, else 0."""
        centres = np.asarray(centres, dtype=float)
        out = np.zeros(len(centres), dtype=np.uint8)
        for start, end in self.segments:
            out[(centres >= start) & (centres < end)] = 1
        return out

    def to_text(self) -> str:
        return "".join(f"{s:.6f}\t{e:.6f}\tcough\n" for s, e in self.segments)


def merge_overlaps(segments):
    merged: list[tuple[float, float]] = []
    for start, end in sorted(segments):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def parse_labels(text: str, recording_id: str = "") -> LabelTrack:
    segments = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 3 or parts[2].strip() != "cough":
            raise LabelError(f"line {lineno}: expected '<start>\\t<end>\\tcough', got {line!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError:
            raise LabelError(f"line {lineno}: non-numeric time in {line!r}") from None
        if start < 0:
            raise LabelError(f"line {lineno}: negative start time {start}")
        if end <= start:
            raise LabelError(f"line {lineno}: end {end} is not after start {start}")
        segments.append((start, end))
    return LabelTrack(tuple(merge_overlaps(segments)), recording_id)


def read_labels(path: str | Path) -> LabelTrack:
    path = Path(path)
    return parse_labels(path.read_text(encoding="utf-8"), recording_id=path.stem)
