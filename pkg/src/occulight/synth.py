"""Seeded generators of labeled skeleton and face frames.

Poses are built in a body frame (spine at origin, +Y up, body right along +X,
facing -Z), checked to sit at least ``MARGIN_DEG`` inside their class's rule
thresholds, then turned about the vertical axis, placed in front of the
camera and perturbed with Gaussian joint noise.

Each subject draws from its own ``SeedSequence([seed, subject_index])``, so
subject ranges can be generated independently and still agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import EMOTION_CLASSES, POSTURE_CLASSES, Dataset
from .errors import InfeasibleConfigError
from .face import (BROW_PAIRS, CHEEK_PAIRS, EMOTION_FEATURE_NAMES, MOUTH_PAIRS,
                   NOSE_TIP, EmotionLabel, FaceFrame, emotion_features, face_template)
from .skeleton import (POSTURE_FEATURE_NAMES, Joint, PostureLabel, SkeletonFrame,
                       leg_angles, posture_features, rotate_about_vertical)

MARGIN_DEG = 10.0
_MAX_ATTEMPTS = 200

DEFAULT_LIMBS = {
    "torso": (0.28, 0.36),       # spine -> shoulder center
    "neck": (0.16, 0.22),        # shoulder center -> head
    "shoulder": (0.15, 0.20),    # half shoulder width
    "upper_arm": (0.26, 0.32),
    "forearm": (0.23, 0.28),
    "hand": (0.07, 0.10),
    "pelvis": (0.08, 0.12),      # spine -> hip center
    "hip": (0.08, 0.11),         # half hip width
    "thigh": (0.40, 0.48),
    "shin": (0.38, 0.46),
    "foot": (0.09, 0.12),
}


@dataclass(frozen=True)
class LabeledFrame:
    frame: object
    label: object


@dataclass
class PoseGenConfig:
    subjects: int = 27
    frames_per_subject: int = 20
    class_mix: tuple = (1 / 3, 1 / 3, 1 / 3)   # Standing, Sitting, LyingDown
    joint_noise: float = 0.02
    limbs: dict = field(default_factory=lambda: dict(DEFAULT_LIMBS))
    turn_range: float = 30.0                    # turn angle bound, degrees
    camera_x: tuple = (-1.0, 1.0)
    camera_y: tuple = (-0.2, 0.4)
    camera_z: tuple = (1.8, 3.5)
    seed: int = 42

    def validate(self):
        if self.subjects < 1 or self.frames_per_subject < 1:
            raise InfeasibleConfigError("subject and frame counts must be >= 1")
        _check_mix(self.class_mix, 3)
        if self.joint_noise < 0:
            raise InfeasibleConfigError("joint_noise must be >= 0")
        for name, (lo, hi) in self.limbs.items():
            if not 0 < lo <= hi:
                raise InfeasibleConfigError(f"limb range {name}={lo, hi} is invalid")
        missing = set(DEFAULT_LIMBS) - set(self.limbs)
        if missing:
            raise InfeasibleConfigError(f"limb ranges missing: {sorted(missing)}")
        # Noise-induced knee-angle spread (1 sd, degrees) must fit inside the label margin.
        shortest = min(self.limbs["thigh"][0], self.limbs["shin"][0])
        spread = math.degrees(self.joint_noise * math.sqrt(2.0) / shortest)
        if spread > MARGIN_DEG:
            raise InfeasibleConfigError(
                f"joint_noise={self.joint_noise} m gives ~{spread:.1f} deg angle noise, "
                f"more than the {MARGIN_DEG} deg label margin")


@dataclass
class FaceGenConfig:
    subjects: int = 31
    frames_per_subject: int = 10
    class_mix: tuple = (1 / 3, 1 / 3, 1 / 3)   # Comfortable, Neutral, Uncomfortable
    intensity: dict = field(default_factory=lambda: {
        "Comfortable": (0.85, 1.15), "Neutral": (0.0, 0.0), "Uncomfortable": (0.85, 1.15)})
    landmark_noise: float = 0.002
    scale_range: tuple = (0.94, 1.06)           # per-subject face size
    shape_jitter: float = 0.001                 # per-subject landmark offsets, meters
    yaw_range: float = 30.0
    pitch_range: float = 15.0
    seed: int = 42

    def validate(self):
        if self.subjects < 1 or self.frames_per_subject < 1:
            raise InfeasibleConfigError("subject and frame counts must be >= 1")
        _check_mix(self.class_mix, 3)
        if self.landmark_noise < 0 or self.shape_jitter < 0:
            raise InfeasibleConfigError("noise levels must be >= 0")
        for name in EMOTION_CLASSES:
            lo, hi = self.intensity.get(name, (None, None))
            if lo is None or not 0 <= lo <= hi:
                raise InfeasibleConfigError(f"intensity range for {name} is invalid")
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise InfeasibleConfigError("scale_range must be positive")
        # Landmark noise must stay well below the smallest expression displacement.
        if self.landmark_noise > 0.01:
            raise InfeasibleConfigError("landmark_noise above 1 cm drowns the expression signal")


def _check_mix(mix, n):
    mix = np.asarray(mix, dtype=float)
    if mix.shape != (n,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise InfeasibleConfigError(f"class_mix must be {n} non-negative weights summing to 1")


def _subject_rng(seed: int, subject: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(subject)]))


def _subject_id(i: int) -> str:
    return f"P{i + 1:02d}"


# ---------------------------------------------------------------- skeletons

def _u(rng, lo, hi):
    return float(rng.uniform(lo, hi))


def _sagittal(angle_deg: float) -> np.ndarray:
    """Unit vector in the Y-Z plane at ``angle_deg`` from +Z toward +Y."""
    t = math.radians(angle_deg)
    return np.array([0.0, math.sin(t), math.cos(t)])


def _rot_x(angle_deg: float) -> np.ndarray:
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _body_pose(label: PostureLabel, limbs: dict, rng) -> np.ndarray:
    """Noiseless joint positions in the body frame."""
    if label is PostureLabel.SITTING:
        lean, thigh_pitch, knee = _u(rng, -8, 15), _u(rng, -12, 20), _u(rng, 70, 115)
        arm_flex = (_u(rng, 20, 60), _u(rng, 20, 60))
    else:
        lean, thigh_pitch, knee = _u(rng, -5, 10), _u(rng, 82, 98), _u(rng, 158, 180)
        arm_flex = (_u(rng, -10, 35), _u(rng, -10, 35))
    roll = _u(rng, -5, 5)

    P = np.zeros((len(Joint), 3))
    lean_r, roll_r = math.radians(lean), math.radians(roll)
    up = np.array([math.sin(roll_r), math.cos(lean_r) * math.cos(roll_r), -math.sin(lean_r) * math.cos(roll_r)])
    up /= np.linalg.norm(up)
    P[Joint.SHOULDER_CENTER] = limbs["torso"] * up
    nod = _rot_x(_u(rng, -15, 15))
    P[Joint.HEAD] = P[Joint.SHOULDER_CENTER] + limbs["neck"] * (nod @ up)

    arms = ((+1, Joint.SHOULDER_RIGHT, Joint.ELBOW_RIGHT, Joint.WRIST_RIGHT, Joint.HAND_RIGHT),
            (-1, Joint.SHOULDER_LEFT, Joint.ELBOW_LEFT, Joint.WRIST_LEFT, Joint.HAND_LEFT))
    for (sign, sh, el, wr, ha), flex in zip(arms, arm_flex):
        P[sh] = P[Joint.SHOULDER_CENTER] + sign * limbs["shoulder"] * np.array([1.0, 0.0, 0.0])
        abd = math.radians(_u(rng, 5, 20))
        f1 = math.radians(flex)
        d1 = np.array([sign * math.sin(abd), -math.cos(abd) * math.cos(f1), -math.cos(abd) * math.sin(f1)])
        f2 = f1 + math.radians(_u(rng, 0, 60))
        d2 = np.array([sign * math.sin(abd), -math.cos(abd) * math.cos(f2), -math.cos(abd) * math.sin(f2)])
        P[el] = P[sh] + limbs["upper_arm"] * d1
        P[wr] = P[el] + limbs["forearm"] * d2
        P[ha] = P[wr] + limbs["hand"] * d2

    P[Joint.HIP_CENTER] = np.array([0.0, -limbs["pelvis"], 0.0])
    legs = ((+1, Joint.HIP_RIGHT, Joint.KNEE_RIGHT, Joint.ANKLE_RIGHT, Joint.FOOT_RIGHT),
            (-1, Joint.HIP_LEFT, Joint.KNEE_LEFT, Joint.ANKLE_LEFT, Joint.FOOT_LEFT))
    for sign, hip, kn, an, ft in legs:
        P[hip] = P[Joint.HIP_CENTER] + sign * limbs["hip"] * np.array([1.0, 0.0, 0.0])
        a = thigh_pitch + _u(rng, -3, 3)
        bend = min(180.0, knee + _u(rng, -3, 3))
        splay = math.radians(_u(rng, 0, 6))
        thigh_dir = -_sagittal(a)
        thigh_dir = np.array([sign * math.sin(splay), *(math.cos(splay) * thigh_dir[1:])])
        P[kn] = P[hip] + limbs["thigh"] * thigh_dir
        P[an] = P[kn] + limbs["shin"] * _sagittal(a - bend)
        P[ft] = P[an] + limbs["foot"] * np.array([0.0, 0.0, -1.0])

    if label is PostureLabel.LYING_DOWN:
        # Tip the whole body backward about the hip axis (X) onto the XZ plane.
        P = P @ _rot_x(_u(rng, 78, 102)).T
    return P


def _inside_margin(label: PostureLabel, P: np.ndarray) -> bool:
    a = leg_angles(SkeletonFrame(P))
    lo, hi = 140.0 - MARGIN_DEG, 140.0 + MARGIN_DEG
    if label is PostureLabel.STANDING:
        return a.knee_mean >= hi and a.elevation_mean >= hi and a.torso_tilt <= 30.0 - MARGIN_DEG
    if label is PostureLabel.SITTING:
        return a.knee_mean <= lo and a.elevation_mean <= lo and a.torso_tilt <= 30.0 - MARGIN_DEG
    return a.torso_tilt >= 60.0 + MARGIN_DEG


def _sample_limbs(limbs: dict, rng) -> dict:
    return {name: _u(rng, lo, hi) for name, (lo, hi) in limbs.items()}


def skeleton_frame(label: PostureLabel, cfg: PoseGenConfig, rng, subject_id: str = "",
                   limbs: dict | None = None, noise: float | None = None) -> SkeletonFrame:
    """One labeled frame; ``limbs`` defaults to a fresh draw from the config ranges."""
    limbs = _sample_limbs(cfg.limbs, rng) if limbs is None else limbs
    for _ in range(_MAX_ATTEMPTS):
        P = _body_pose(label, limbs, rng)
        if _inside_margin(label, P):
            break
    else:
        raise InfeasibleConfigError(f"could not build a {label.value} pose inside the label margin")
    P = rotate_about_vertical(P, _u(rng, -cfg.turn_range, cfg.turn_range))
    P = P + np.array([_u(rng, *cfg.camera_x), _u(rng, *cfg.camera_y), _u(rng, *cfg.camera_z)])
    sigma = cfg.joint_noise if noise is None else noise
    if sigma > 0:
        P = P + rng.normal(0.0, sigma, P.shape)
    return SkeletonFrame(P, subject_id)


def gen_skeleton_dataset(cfg: PoseGenConfig) -> list:
    """Labeled skeleton frames ordered by subject, then frame."""
    cfg.validate()
    labels = [PostureLabel(name) for name in POSTURE_CLASSES]
    out = []
    for s in range(cfg.subjects):
        rng = _subject_rng(cfg.seed, s)
        limbs = _sample_limbs(cfg.limbs, rng)
        sid = _subject_id(s)
        for _ in range(cfg.frames_per_subject):
            label = labels[int(rng.choice(3, p=cfg.class_mix))]
            out.append(LabeledFrame(skeleton_frame(label, cfg, rng, sid, limbs), label))
    return out


def posture_dataset(cfg: PoseGenConfig | None = None) -> Dataset:
    frames = gen_skeleton_dataset(cfg or PoseGenConfig())
    X = np.array([posture_features(lf.frame) for lf in frames])
    y = np.array([lf.label.index for lf in frames])
    subjects = [lf.frame.subject_id for lf in frames]
    return Dataset(X, y, subjects, POSTURE_CLASSES, POSTURE_FEATURE_NAMES)


# ---------------------------------------------------------------- faces

def _outward(points: np.ndarray, idx) -> np.ndarray:
    return np.sign(points[list(idx), 0])


def deform_face(points: np.ndarray, label: EmotionLabel, intensity: float, scale: float = 1.0) -> np.ndarray:
    """Apply an expression to nose-centered points; Neutral is the identity.

    Displacements act only on selected indices (brows, mouth, cheeks) and are
    proportional to ``intensity * scale``.
    """
    P = np.array(points, dtype=float)
    k = intensity * scale
    if label is EmotionLabel.NEUTRAL or k == 0.0:
        return P
    brows = [i for p in BROW_PAIRS for i in p]
    mouth = [i for p in MOUTH_PAIRS for i in p]
    cheeks = [i for p in CHEEK_PAIRS for i in p]
    corners = list(MOUTH_PAIRS[2])
    if label is EmotionLabel.COMFORTABLE:
        # Smile: corners up and out, lips follow, cheeks lift, brows relax upward.
        P[corners, 1] += 0.0126 * k
        P[corners, 0] += 0.007 * k * _outward(P, corners)
        lips = list(MOUTH_PAIRS[1]) + list(MOUTH_PAIRS[5])
        P[lips, 1] += 0.0056 * k
        P[lips, 0] += 0.0042 * k * _outward(P, lips)
        P[cheeks, 1] += 0.0056 * k
        P[brows, 1] += 0.0028 * k
    else:
        # Discomfort: brows drop and knit, mouth narrows and presses together.
        P[brows, 1] -= 0.0084 * k
        inner = list(BROW_PAIRS[0]) + list(BROW_PAIRS[1])
        P[inner, 0] -= 0.0056 * k * _outward(P, inner)
        yc = P[mouth, 1].mean()
        P[mouth, 0] *= 1.0 - 0.25 * k
        P[mouth, 1] = yc + (P[mouth, 1] - yc) * (1.0 - 0.49 * k)
        P[corners, 1] -= 0.0042 * k
    return P


def _rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    cy, sy = math.cos(math.radians(yaw)), math.sin(math.radians(yaw))
    Ry = np.array([[cy, 0.0, -sy], [0.0, 1.0, 0.0], [sy, 0.0, cy]])
    Rz = np.array([[math.cos(math.radians(roll)), -math.sin(math.radians(roll)), 0.0],
                   [math.sin(math.radians(roll)), math.cos(math.radians(roll)), 0.0],
                   [0.0, 0.0, 1.0]])
    return Ry @ _rot_x(pitch) @ Rz


def _subject_face(cfg: FaceGenConfig, rng) -> tuple:
    scale = _u(rng, *cfg.scale_range)
    base = face_template() * scale
    if cfg.shape_jitter > 0:
        base = base + rng.normal(0.0, cfg.shape_jitter, base.shape)
        base = base - base[NOSE_TIP]
    return base, scale


def face_frame(label: EmotionLabel, cfg: FaceGenConfig, rng, subject_id: str = "",
               base=None, scale: float | None = None, noise: float | None = None) -> FaceFrame:
    if base is None:
        base, scale = _subject_face(cfg, rng)
    lo, hi = cfg.intensity[label.value]
    P = deform_face(base, label, _u(rng, lo, hi), scale)
    R = _rotation(_u(rng, -cfg.yaw_range, cfg.yaw_range), _u(rng, -cfg.pitch_range, cfg.pitch_range),
                  _u(rng, -10, 10))
    P = P @ R.T + np.array([_u(rng, -0.5, 0.5), _u(rng, -0.2, 0.3), _u(rng, 1.2, 2.5)])
    sigma = cfg.landmark_noise if noise is None else noise
    if sigma > 0:
        P = P + rng.normal(0.0, sigma, P.shape)
    return FaceFrame(P, subject_id)


def gen_face_dataset(cfg: FaceGenConfig) -> list:
    cfg.validate()
    labels = [EmotionLabel(name) for name in EMOTION_CLASSES]
    out = []
    for s in range(cfg.subjects):
        rng = _subject_rng(cfg.seed, s)
        base, scale = _subject_face(cfg, rng)
        sid = _subject_id(s)
        for _ in range(cfg.frames_per_subject):
            label = labels[int(rng.choice(3, p=cfg.class_mix))]
            out.append(LabeledFrame(face_frame(label, cfg, rng, sid, base, scale), label))
    return out


def emotion_dataset(cfg: FaceGenConfig | None = None) -> Dataset:
    frames = gen_face_dataset(cfg or FaceGenConfig())
    X = np.array([emotion_features(lf.frame) for lf in frames])
    y = np.array([lf.label.index for lf in frames])
    subjects = [lf.frame.subject_id for lf in frames]
    return Dataset(X, y, subjects, EMOTION_CLASSES, EMOTION_FEATURE_NAMES)


# ---------------------------------------------------------------- camera

def perturb_camera(frame, translation=(0.0, 0.0, 0.0), rotation_deg: float = 0.0):
    """Rigid camera-frame motion: rotate about the vertical axis through the
    spine (skeletons) or nose tip (faces), then translate."""
    if isinstance(frame, SkeletonFrame):
        pts, pivot = frame.positions, frame.positions[Joint.SPINE]
        make = SkeletonFrame
    elif isinstance(frame, FaceFrame):
        pts, pivot = frame.points, frame.points[NOSE_TIP]
        make = FaceFrame
    else:
        raise TypeError(f"expected SkeletonFrame or FaceFrame, got {type(frame).__name__}")
    out = pts if rotation_deg == 0.0 else rotate_about_vertical(pts, rotation_deg, pivot)
    return make(out + np.asarray(translation, dtype=float), frame.subject_id)
