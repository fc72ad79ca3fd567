"""Comfort-expression features from 120-point face frames.

All 120 points are first expressed relative to the nose tip. Of those, 32
selected points feed the features: 14 left/right mirror pairs (eyebrows,
mouth, cheeks) and 4 nose-side points. The 46-vector is the 32 distances
from the nose tip followed by the 14 right-to-left pair distances.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InvalidFrameError

N_FACE_POINTS = 120
NOSE_TIP = 0
N_EMOTION_FEATURES = 46


class EmotionLabel(enum.Enum):
    COMFORTABLE = "Comfortable"
    NEUTRAL = "Neutral"
    UNCOMFORTABLE = "Uncomfortable"

    @property
    def index(self) -> int:
        return _EMOTION_ORDER.index(self)

    @classmethod
    def from_index(cls, i: int) -> "EmotionLabel":
        return _EMOTION_ORDER[i]


_EMOTION_ORDER = (EmotionLabel.COMFORTABLE, EmotionLabel.NEUTRAL, EmotionLabel.UNCOMFORTABLE)


@dataclass(frozen=True)
class SelectedFaceSet:
    """Indices of the expression-bearing points.

    ``pairs`` holds (right, left) template indices; ``singletons`` are the
    nose-side points, which enter the nose distances only.
    """

    pairs: tuple
    singletons: tuple

    def __post_init__(self):
        flat = [i for p in self.pairs for i in p] + list(self.singletons)
        if len(set(flat)) != len(flat):
            raise ValueError("selected face indices must be distinct")
        if any(not 0 <= i < N_FACE_POINTS for i in flat):
            raise ValueError("selected face index out of range")

    @property
    def indices(self) -> tuple:
        """Selection order: each pair as right then left, then the singletons."""
        return tuple(i for p in self.pairs for i in p) + tuple(self.singletons)


# Template layout (see scripts/make_face_template.py): index 0 is the nose
# tip, then mirror pairs (right, left) for 4 brow, 6 mouth, 4 cheek and
# 2 nose-side positions, then unselected filler.
BROW_PAIRS = ((1, 2), (3, 4), (5, 6), (7, 8))
MOUTH_PAIRS = ((9, 10), (11, 12), (13, 14), (15, 16), (17, 18), (19, 20))
CHEEK_PAIRS = ((21, 22), (23, 24), (25, 26), (27, 28))
NOSE_SIDE_POINTS = (29, 30, 31, 32)

SELECTED = SelectedFaceSet(pairs=BROW_PAIRS + MOUTH_PAIRS + CHEEK_PAIRS, singletons=NOSE_SIDE_POINTS)

EMOTION_FEATURE_NAMES = tuple(
    [f"ed_np_{i}" for i in SELECTED.indices] + [f"ed_h_{r}_{l}" for r, l in SELECTED.pairs]
)


def _mirror_permutation() -> np.ndarray:
    perm = np.arange(N_FACE_POINTS)
    # Midline points (33..41) and the nose tip map to themselves.
    paired = list(range(1, 33)) + list(range(42, 120))
    for a, b in zip(paired[0::2], paired[1::2]):
        perm[a], perm[b] = b, a
    return perm


#: MIRROR[i] is the template index of the point mirroring i across X = 0.
MIRROR = _mirror_permutation()


@lru_cache(maxsize=1)
def face_template() -> np.ndarray:
    """Neutral 120-point face, nose tip at the origin; read-only."""
    with resources.files("occulight").joinpath("data/face_template.csv").open("r") as fh:
        rows = list(csv.DictReader(fh))
    pts = np.array([[float(r["x"]), float(r["y"]), float(r["z"])] for r in rows])
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True)
class FaceFrame:
    points: np.ndarray
    subject_id: str = ""

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.shape != (N_FACE_POINTS, 3):
            raise InvalidFrameError(f"face frame needs shape ({N_FACE_POINTS}, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidFrameError("face frame has non-finite coordinates")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def translated(self, offset) -> "FaceFrame":
        return FaceFrame(self.points + np.asarray(offset, dtype=float), self.subject_id)


def recenter_to_nose(frame: FaceFrame) -> FaceFrame:
    if not np.all(np.isfinite(frame.points)):
        raise InvalidFrameError("face frame has non-finite coordinates")
    return FaceFrame(frame.points - frame.points[NOSE_TIP], frame.subject_id)


def selected_coordinates(frame: FaceFrame, sel: SelectedFaceSet = SELECTED) -> np.ndarray:
    """The 96 nose-centered coordinates of the selected points, flattened."""
    return recenter_to_nose(frame).points[list(sel.indices)].ravel()


def ed_np(frame: FaceFrame, sel: SelectedFaceSet = SELECTED) -> np.ndarray:
    return np.linalg.norm(frame.points[list(sel.indices)], axis=1)


def ed_h(frame: FaceFrame, sel: SelectedFaceSet = SELECTED) -> np.ndarray:
    right = frame.points[[r for r, _ in sel.pairs]]
    left = frame.points[[l for _, l in sel.pairs]]
    return np.linalg.norm(right - left, axis=1)


def emotion_features(frame: FaceFrame, sel: SelectedFaceSet = SELECTED) -> np.ndarray:
    c = recenter_to_nose(frame)
    return np.concatenate([ed_np(c, sel), ed_h(c, sel)])


def mirror_frame(frame: FaceFrame) -> FaceFrame:
    """Reflect across X = 0 and relabel points so left and right swap roles."""
    pts = frame.points * np.array([-1.0, 1.0, 1.0])
    return FaceFrame(pts[MIRROR], frame.subject_id)


class EmotionFeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer: iterable of FaceFrame -> (n, 46) array."""

    def fit(self, frames, y=None):
        return self

    def transform(self, frames):
        rows = [emotion_features(f) for f in frames]
        return np.array(rows).reshape(len(rows), N_EMOTION_FEATURES)

    def get_feature_names_out(self, input_features=None):
        return np.array(EMOTION_FEATURE_NAMES, dtype=object)
