"""Per-frame annotation and result containers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Box, PairedBox


@dataclass(frozen=True)
class GTEntry:
    identity: int
    box: Box
    visible: bool = True


class SequenceGT:
    """Ground truth: per-frame sets of identified boxes with visibility.

    Each identity appears at most once per frame; invisible entries are kept
    and flagged, never deleted.
    """

    def __init__(self) -> None:
        self._frames: dict[int, list[GTEntry]] = {}

    def add(self, frame: int, identity: int, box: Box, visible: bool = True) -> None:
        entries = self._frames.setdefault(frame, [])
        if any(e.identity == identity for e in entries):
            raise ValueError(f"identity {identity} already present in frame {frame}")
        entries.append(GTEntry(identity, box, visible))

    @property
    def frames(self) -> list[int]:
        return sorted(self._frames)

    def entries(self, frame: int) -> list[GTEntry]:
        return list(self._frames.get(frame, []))

    def visible_at(self, frame: int) -> list[tuple[int, Box]]:
        return [(e.identity, e.box) for e in self._frames.get(frame, []) if e.visible]

    def visible_pairs(self, frame_prev: int, frame_cur: int) -> list[tuple[int, PairedBox]]:
        """Identities visible in both frames, as paired boxes, sorted by id."""
        prev = {e.identity: e.box for e in self._frames.get(frame_prev, []) if e.visible}
        cur = {e.identity: e.box for e in self._frames.get(frame_cur, []) if e.visible}
        common = sorted(set(prev) & set(cur))
        return [(i, PairedBox(prev[i], cur[i])) for i in common]

    def identities(self) -> list[int]:
        ids: set[int] = set()
        for entries in self._frames.values():
            ids.update(e.identity for e in entries)
        return sorted(ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SequenceGT):
            return NotImplemented
        return self._frames == other._frames


@dataclass(frozen=True)
class ResultEntry:
    identity: int
    box: Box
    conf: float = 1.0


class SequenceResult:
    """Tracker output: per-frame identified boxes with confidences."""

    def __init__(self) -> None:
        self._frames: dict[int, list[ResultEntry]] = {}

    def add(self, frame: int, identity: int, box: Box, conf: float = 1.0) -> None:
        self._frames.setdefault(frame, []).append(ResultEntry(identity, box, conf))

    @property
    def frames(self) -> list[int]:
        return sorted(self._frames)

    def entries(self, frame: int) -> list[ResultEntry]:
        return list(self._frames.get(frame, []))

    def identities(self) -> list[int]:
        ids: set[int] = set()
        for entries in self._frames.values():
            ids.update(e.identity for e in entries)
        return sorted(ids)
