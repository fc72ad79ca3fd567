"""Posture features from 20-joint skeleton frames.

Coordinates follow the depth-camera convention: +Y up, +Z away from the
camera, meters. Every angle is in degrees. Features are computed after
moving the origin to the spine joint, so camera placement drops out.

Spherical convention for a spine-centered point (x, y, z)::

    radius  = sqrt(x^2 + y^2 + z^2)
    polar   = atan2(sqrt(x^2 + z^2), y)   # 0 = straight up, 180 = straight down
    azimuth = atan2(x, z)                 # (-180, 180]

The 31-vector is (polar, azimuth) for each joint of ``FEATURE_JOINTS`` in
that order, followed by the hip-line turn angle.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DegeneratePoseError, InvalidFrameError

logger = logging.getLogger(__name__)

_EPS = 1e-9


class Joint(enum.IntEnum):
    HEAD = 0
    SHOULDER_CENTER = 1
    SHOULDER_LEFT = 2
    SHOULDER_RIGHT = 3
    ELBOW_LEFT = 4
    ELBOW_RIGHT = 5
    WRIST_LEFT = 6
    WRIST_RIGHT = 7
    HAND_LEFT = 8
    HAND_RIGHT = 9
    SPINE = 10
    HIP_CENTER = 11
    HIP_LEFT = 12
    HIP_RIGHT = 13
    KNEE_LEFT = 14
    KNEE_RIGHT = 15
    ANKLE_LEFT = 16
    ANKLE_RIGHT = 17
    FOOT_LEFT = 18
    FOOT_RIGHT = 19

    @property
    def redundant(self) -> bool:
        """Hands and feet carry no posture information and are dropped."""
        return self in _REDUNDANT


_REDUNDANT = frozenset({Joint.HAND_LEFT, Joint.HAND_RIGHT, Joint.FOOT_LEFT, Joint.FOOT_RIGHT})
N_JOINTS = len(Joint)

# Frozen serialization order of the 15 feature joints.
FEATURE_JOINTS = (
    Joint.HEAD, Joint.SHOULDER_CENTER,
    Joint.SHOULDER_LEFT, Joint.SHOULDER_RIGHT,
    Joint.ELBOW_LEFT, Joint.ELBOW_RIGHT,
    Joint.WRIST_LEFT, Joint.WRIST_RIGHT,
    Joint.HIP_CENTER,
    Joint.HIP_LEFT, Joint.HIP_RIGHT,
    Joint.KNEE_LEFT, Joint.KNEE_RIGHT,
    Joint.ANKLE_LEFT, Joint.ANKLE_RIGHT,
)
N_POSTURE_FEATURES = 2 * len(FEATURE_JOINTS) + 1

POSTURE_FEATURE_NAMES = tuple(
    [f"{kind}_{j.name.lower()}" for j in FEATURE_JOINTS for kind in ("polar", "azimuth")] + ["turn"]
)

# Rule-labeler thresholds (degrees).
LEG_THRESHOLD = 140.0
UPRIGHT_MAX_TILT = 30.0
LYING_MIN_TILT = 60.0


class PostureLabel(enum.Enum):
    STANDING = "Standing"
    SITTING = "Sitting"
    LYING_DOWN = "LyingDown"

    @property
    def index(self) -> int:
        return _POSTURE_ORDER.index(self)

    @classmethod
    def from_index(cls, i: int) -> "PostureLabel":
        return _POSTURE_ORDER[i]


_POSTURE_ORDER = (PostureLabel.STANDING, PostureLabel.SITTING, PostureLabel.LYING_DOWN)


@dataclass(frozen=True)
class SkeletonFrame:
    """Positions of all 20 joints, shape (20, 3), rows indexed by ``Joint``."""

    positions: np.ndarray
    subject_id: str = ""

    def __post_init__(self):
        p = np.array(self.positions, dtype=float)
        if p.shape != (N_JOINTS, 3):
            raise InvalidFrameError(f"skeleton frame needs shape ({N_JOINTS}, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidFrameError("skeleton frame has non-finite coordinates")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    def __getitem__(self, joint: Joint) -> np.ndarray:
        return self.positions[joint]

    @classmethod
    def from_mapping(cls, joints: dict, subject_id: str = "") -> "SkeletonFrame":
        missing = [j.name for j in Joint if j not in joints]
        if missing:
            raise InvalidFrameError(f"missing joints: {', '.join(missing)}")
        return cls(np.array([joints[j] for j in Joint], dtype=float), subject_id)

    def translated(self, offset) -> "SkeletonFrame":
        return SkeletonFrame(self.positions + np.asarray(offset, dtype=float), self.subject_id)


@dataclass(frozen=True)
class SphericalCoords:
    radius: float
    polar: float
    azimuth: float


@dataclass(frozen=True)
class LegAngles:
    knee_left: float
    knee_right: float
    elevation_left: float
    elevation_right: float
    torso_tilt: float

    @property
    def knee_mean(self) -> float:
        return 0.5 * (self.knee_left + self.knee_right)

    @property
    def elevation_mean(self) -> float:
        return 0.5 * (self.elevation_left + self.elevation_right)


def _wrap_degrees(a: float) -> float:
    """Map an angle into (-180, 180]."""
    a = math.fmod(a, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def recenter_to_spine(frame: SkeletonFrame) -> SkeletonFrame:
    if not np.all(np.isfinite(frame.positions)):
        raise InvalidFrameError("skeleton frame has non-finite coordinates")
    return SkeletonFrame(frame.positions - frame.positions[Joint.SPINE], frame.subject_id)


def to_spherical(p) -> SphericalCoords:
    x, y, z = (float(c) for c in p)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return SphericalCoords(0.0, 0.0, 0.0)
    polar = math.degrees(math.atan2(math.hypot(x, z), y))
    azimuth = _wrap_degrees(math.degrees(math.atan2(x, z)))
    return SphericalCoords(r, polar, azimuth)


def from_spherical(s: SphericalCoords) -> np.ndarray:
    """Inverse of :func:`to_spherical`."""
    t, f = math.radians(s.polar), math.radians(s.azimuth)
    rho = s.radius * math.sin(t)
    return np.array([rho * math.sin(f), s.radius * math.cos(t), rho * math.cos(f)])


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < _EPS or nv < _EPS:
        raise DegeneratePoseError("zero-length vector in angle computation")
    c = float(np.dot(u, v) / (nu * nv))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def turn_angle(frame: SkeletonFrame) -> float:
    """Rotation of the hip line about the vertical axis, in (-180, 180].

    Zero when the right hip lies along +X from the left hip (body square to
    the camera); positive as the hip line turns from +X toward +Z.
    """
    h = frame[Joint.HIP_RIGHT] - frame[Joint.HIP_LEFT]
    if math.hypot(h[0], h[2]) < _EPS:
        raise DegeneratePoseError("hip line has no horizontal extent")
    return _wrap_degrees(math.degrees(math.atan2(h[2], h[0])))


def _side(side: str):
    if side == "left":
        return Joint.HIP_LEFT, Joint.KNEE_LEFT, Joint.ANKLE_LEFT
    if side == "right":
        return Joint.HIP_RIGHT, Joint.KNEE_RIGHT, Joint.ANKLE_RIGHT
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def knee_angle(frame: SkeletonFrame, side: str) -> float:
    """Hip-knee-ankle angle; 180 for a straight leg."""
    hip, knee, ankle = _side(side)
    return _angle_between(frame[hip] - frame[knee], frame[ankle] - frame[knee])


def knee_elevation(frame: SkeletonFrame, side: str) -> float:
    """Polar angle of the knee seen from the spine (180 = directly below)."""
    _, knee, _ = _side(side)
    p = frame[knee]
    if np.linalg.norm(p) < _EPS:
        raise DegeneratePoseError(f"{side} knee coincides with the spine")
    return to_spherical(p).polar


def torso_inclination(frame: SkeletonFrame) -> float:
    v = frame[Joint.SHOULDER_CENTER] - frame[Joint.SPINE]
    if np.linalg.norm(v) < _EPS:
        raise DegeneratePoseError("shoulder center coincides with the spine")
    return _angle_between(v, np.array([0.0, 1.0, 0.0]))


def leg_angles(frame: SkeletonFrame) -> LegAngles:
    """All rule-labeler angles; ``frame`` is recentered first."""
    c = recenter_to_spine(frame)
    return LegAngles(
        knee_left=knee_angle(c, "left"),
        knee_right=knee_angle(c, "right"),
        elevation_left=knee_elevation(c, "left"),
        elevation_right=knee_elevation(c, "right"),
        torso_tilt=torso_inclination(c),
    )


def posture_features(frame: SkeletonFrame) -> np.ndarray:
    c = recenter_to_spine(frame)
    out = np.empty(N_POSTURE_FEATURES)
    for k, joint in enumerate(FEATURE_JOINTS):
        p = c[joint]
        if np.linalg.norm(p) < _EPS:
            logger.warning("joint %s coincides with the spine; emitting zero angles", joint.name)
            out[2 * k] = out[2 * k + 1] = 0.0
            continue
        s = to_spherical(p)
        out[2 * k], out[2 * k + 1] = s.polar, s.azimuth
    out[-1] = turn_angle(c)
    return out


def label_from_angles(knee_mean: float, elevation_mean: float, torso_tilt: float) -> PostureLabel:
    """Rule labeler on precomputed angles.

    Lying beats standing beats sitting. Poses matching no rule go to the
    class whose thresholds are violated by the fewest total degrees, ties to
    the lowest class index.
    """
    if torso_tilt >= LYING_MIN_TILT:
        return PostureLabel.LYING_DOWN
    if knee_mean > LEG_THRESHOLD and elevation_mean > LEG_THRESHOLD and torso_tilt < UPRIGHT_MAX_TILT:
        return PostureLabel.STANDING
    if knee_mean < LEG_THRESHOLD and elevation_mean < LEG_THRESHOLD:
        return PostureLabel.SITTING
    violation = {
        PostureLabel.STANDING: max(0.0, LEG_THRESHOLD - knee_mean)
        + max(0.0, LEG_THRESHOLD - elevation_mean) + max(0.0, torso_tilt - UPRIGHT_MAX_TILT),
        PostureLabel.SITTING: max(0.0, knee_mean - LEG_THRESHOLD) + max(0.0, elevation_mean - LEG_THRESHOLD),
        PostureLabel.LYING_DOWN: max(0.0, LYING_MIN_TILT - torso_tilt),
    }
    return min(_POSTURE_ORDER, key=lambda lab: (violation[lab], lab.index))


def rule_label_posture(frame: SkeletonFrame) -> PostureLabel:
    a = leg_angles(frame)
    return label_from_angles(a.knee_mean, a.elevation_mean, a.torso_tilt)


def rotate_about_vertical(points: np.ndarray, angle_deg: float, center=None) -> np.ndarray:
    """Rotate points about the +Y axis through ``center``; +X turns toward +Z."""
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    R = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    pts = np.asarray(points, dtype=float)
    center = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    return (pts - center) @ R.T + center


class PostureFeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer: iterable of SkeletonFrame -> (n, 31) array."""

    def fit(self, frames, y=None):
        return self

    def transform(self, frames):
        rows = [posture_features(f) for f in frames]
        return np.array(rows).reshape(len(rows), N_POSTURE_FEATURES)

    def get_feature_names_out(self, input_features=None):
        return np.array(POSTURE_FEATURE_NAMES, dtype=object)
