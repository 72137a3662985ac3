import numpy as np
import pytest

from pairtrack.geometry import Box
from pairtrack.schedule import NoiseSchedule
from pairtrack.sequences import SequenceGT


@pytest.fixture
def sched():
    return NoiseSchedule()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def three_object_scene():
    """Two frames, three well-separated objects drifting right by 3 px."""
    gt = SequenceGT()
    boxes = [Box(200, 200, 80, 60), Box(700, 400, 100, 90), Box(1200, 600, 60, 110)]
    for frame in (0, 1):
        for oid, b in enumerate(boxes):
            gt.add(frame, oid, Box(b.cx + 3 * frame, b.cy, b.w, b.h))
    return gt
