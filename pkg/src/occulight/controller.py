"""Lighting policy, simulated tube-light plant and the closed automation loop.

Policy per step (``control_step``):

- occupancy 0: POWER_OFF every light whose level is above 0, nothing else;
- posture unknown: POWER_ON every light at level 0;
- otherwise compare the posture target with the mean measured lux. Outside
  the deadband, issue ``multiplier(emotion)`` INT_UP / INT_DOWN commands,
  each to the light furthest from the limit it moves toward (ties go to the
  lowest id). Comfortable occupants get multiplier 0, i.e. hold.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ScenarioError
from .face import EmotionLabel, emotion_features
from .sensornet import (LUX_SENSORS, Ack, Action, Command, Event, ProtocolError, decode_message,
                        encode_message, hub_ingest)
from .skeleton import PostureLabel, rule_label_posture
from .state import MAX_LEVEL, N_LIGHTS, RoomState


@dataclass(frozen=True)
class ControlConfig:
    target_standing: float = 400.0
    target_sitting: float = 300.0
    target_lying: float = 100.0
    deadband: float = 50.0
    step_ms: int = 1000
    mult_uncomfortable: int = 2
    mult_neutral: int = 1
    mult_comfortable: int = 0

    def validate(self):
        if min(self.target_standing, self.target_sitting, self.target_lying) <= 0:
            raise ValueError("lux targets must be positive")
        if self.deadband < 0:
            raise ValueError("deadband must be non-negative")
        if self.step_ms <= 0:
            raise ValueError("step_ms must be positive")
        if min(self.mult_uncomfortable, self.mult_neutral, self.mult_comfortable) < 0:
            raise ValueError("emotion multipliers must be non-negative")
        return self

    def multiplier(self, emotion: EmotionLabel | None) -> int:
        if emotion is EmotionLabel.UNCOMFORTABLE:
            return self.mult_uncomfortable
        if emotion is EmotionLabel.COMFORTABLE:
            return self.mult_comfortable
        return self.mult_neutral            # unknown counts as Neutral


def target_lux(posture: PostureLabel | None, cfg: ControlConfig = ControlConfig()):
    """Configured target for a posture, or None when the posture is unknown."""
    return {PostureLabel.STANDING: cfg.target_standing, PostureLabel.SITTING: cfg.target_sitting,
            PostureLabel.LYING_DOWN: cfg.target_lying}.get(posture)


def control_step(state: RoomState, cfg: ControlConfig = ControlConfig()) -> list:
    levels = list(state.levels)
    if state.occupancy == 0:
        return [Command(i, Action.POWER_OFF) for i, v in enumerate(levels) if v > 0]
    target = target_lux(state.posture, cfg)
    if target is None:
        return [Command(i, Action.POWER_ON) for i, v in enumerate(levels) if v == 0]
    err = target - state.mean_lux
    if abs(err) <= cfg.deadband:
        return []
    up = err > 0
    cmds = []
    for _ in range(cfg.multiplier(state.emotion)):
        # distance to the limit this command pushes toward; argmax takes the lowest id on ties
        room = [MAX_LEVEL - v if up else v for v in levels]
        i = int(np.argmax(room))
        if room[i] == 0:
            break
        levels[i] += 1 if up else -1
        cmds.append(Command(i, Action.INT_UP if up else Action.INT_DOWN))
    return cmds


@dataclass
class LightPlant:
    """Three dimmable lights; every lux sensor reads the room total
    ``ambient + gain * sum(levels)``."""

    levels: list = field(default_factory=lambda: [0] * N_LIGHTS)
    gain: float = 40.0
    ambient: float = 0.0

    def apply(self, cmd: Command) -> Ack:
        v = self.levels[cmd.light_id]
        if cmd.action is Action.POWER_OFF:
            v = 0
        elif cmd.action is Action.POWER_ON:
            v = max(v, 1)
        elif cmd.action is Action.INT_UP:
            v = min(v + 1, MAX_LEVEL)
        else:
            v = max(v - 1, 0)
        self.levels[cmd.light_id] = v
        return Ack(cmd.light_id, v)

    def measured_lux(self) -> float:
        return self.ambient + self.gain * sum(self.levels)

    def lux_events(self, ts: int, node_id: str = "plant") -> list:
        lux = self.measured_lux()
        return [Event(node_id, s, lux, ts) for s in LUX_SENSORS]


# ---------------------------------------------------------------- scenarios

@dataclass(frozen=True)
class FrameDirective:
    kind: str           # "posture" | "emotion"
    label: str
    seed: int
    ts: int


def parse_scenario(text: str) -> list:
    """Timed items (Event or FrameDirective) in file order.

    Lines are wire ``EVT`` messages or ``FRAME <posture|emotion> <class>
    <seed> [ts_ms]``; a FRAME without ``ts_ms`` inherits the previous
    line's time. Blank lines and ``#`` comments are ignored.
    """
    items, last_ts = [], 0
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("FRAME"):
            parts = line.split()
            if len(parts) not in (4, 5):
                raise ScenarioError("FRAME takes <posture|emotion> <class> <seed> [ts_ms]", no)
            kind, label = parts[1], parts[2]
            valid = {"posture": [p.value for p in PostureLabel], "emotion": [e.value for e in EmotionLabel]}
            if kind not in valid:
                raise ScenarioError(f"FRAME kind must be posture or emotion, got {kind!r}", no)
            if label not in valid[kind]:
                raise ScenarioError(f"unknown {kind} class {label!r}", no)
            try:
                seed = int(parts[3])
                ts = int(parts[4]) if len(parts) == 5 else last_ts
            except ValueError:
                raise ScenarioError("FRAME seed and ts must be integers", no) from None
            if seed < 0 or ts < 0:
                raise ScenarioError("FRAME seed and ts must be non-negative", no)
            items.append(FrameDirective(kind, label, seed, ts))
        else:
            try:
                msg = decode_message(line + "\n")
            except ProtocolError as exc:
                raise ScenarioError(str(exc), no) from None
            if not isinstance(msg, Event):
                raise ScenarioError("scenarios may only contain EVT and FRAME lines", no)
            items.append(msg)
        if items[-1].ts < last_ts:
            raise ScenarioError(f"timestamps must not decrease ({items[-1].ts} < {last_ts})", no)
        last_ts = items[-1].ts
    return items


@lru_cache(maxsize=1)
def default_emotion_model():
    from .classical import make_estimator
    from .synth import emotion_dataset

    d = emotion_dataset()
    return make_estimator("gnb", {}, 0).fit(d.X, d.y)


class FrameClassifier:
    """Turns FRAME directives into labels via synthetic frames.

    Posture uses the rule labeler unless ``posture_model`` (features in,
    class index out) is given; emotion defaults to Gaussian naive Bayes
    trained on the default synthetic emotion data.
    """

    def __init__(self, posture_model=None, emotion_model=None):
        self.posture_model = posture_model
        self.emotion_model = emotion_model

    def __call__(self, d: FrameDirective):
        from .skeleton import posture_features
        from .synth import FaceGenConfig, PoseGenConfig, face_frame, skeleton_frame

        rng = np.random.default_rng(d.seed)
        if d.kind == "posture":
            frame = skeleton_frame(PostureLabel(d.label), PoseGenConfig(), rng, "scenario")
            if self.posture_model is None:
                return rule_label_posture(frame)
            idx = int(self.posture_model.predict(posture_features(frame)[None, :])[0])
            return PostureLabel.from_index(idx)
        frame = face_frame(EmotionLabel(d.label), FaceGenConfig(), rng, "scenario")
        model = self.emotion_model or default_emotion_model()
        return EmotionLabel.from_index(int(model.predict(emotion_features(frame)[None, :])[0]))


# ---------------------------------------------------------------- loop

TRACE_COLUMNS = ("step", "ts", "occupancy", "posture", "emotion", "lux0", "lux1", "lux2", "commands")


@dataclass
class TraceRow:
    step: int
    ts: int
    state: RoomState
    commands: tuple
    faults: tuple = ()


@dataclass
class LoopResult:
    rows: list
    state: RoomState
    steady: bool
    violations: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rows:
            s = r.state
            cmds = ";".join(encode_message(c).decode("ascii").strip() for c in r.commands)
            w.writerow([r.step, r.ts, s.occupancy, s.posture.value if s.posture else "unknown",
                        s.emotion.value if s.emotion else "unknown", *(format(v, "g") for v in s.lux), cmds])
        return buf.getvalue()


def run_automation_loop(items, cfg: ControlConfig = ControlConfig(), plant: LightPlant | None = None,
                        max_steps: int = 100, classifier=None, quiet_steps: int = 3,
                        stop_when_steady: bool = True, initial_state: RoomState | None = None) -> LoopResult:
    """Closed loop at one step per ``cfg.step_ms``.

    Step ``k`` runs at ``ts = k * step_ms``: ingest scheduled items with
    ``ts`` up to now, run the policy on the snapshot, apply commands to the
    plant, then fold the plant's ACKs and lux readings back in. Ingestion
    errors are recorded as faults on the step's trace row.
    """
    cfg.validate()
    plant = plant or LightPlant()
    classify = classifier or FrameClassifier()
    items = list(items)
    state = replace(initial_state or RoomState(), levels=tuple(plant.levels))
    for ev in plant.lux_events(0):
        state = hub_ingest(state, ev)
    rows, violations = [], []
    pos, quiet, steady = 0, 0, False
    for step in range(max_steps):
        now = step * cfg.step_ms
        faults = []
        while pos < len(items) and items[pos].ts <= now:
            item = items[pos]
            pos += 1
            try:
                if isinstance(item, FrameDirective):
                    label = classify(item)
                    field_name = "posture" if item.kind == "posture" else "emotion"
                    state = state.stamp(field_name, item.ts, **{field_name: label})
                else:
                    state = hub_ingest(state, item)
            except Exception as exc:        # fault isolation: record and continue
                faults.append(f"{type(exc).__name__}: {exc}")
        snapshot = state
        cmds = control_step(snapshot, cfg)
        if snapshot.occupancy == 0 and any(c.action in (Action.INT_UP, Action.INT_DOWN) for c in cmds):
            violations.append(f"step {step}: intensity command at occupancy 0")
        for c in cmds:
            state = hub_ingest(state, plant.apply(c))
        for ev in plant.lux_events(now):
            state = hub_ingest(state, ev)
        rows.append(TraceRow(step, now, snapshot, tuple(cmds), tuple(faults)))
        quiet = 0 if cmds else quiet + 1
        if quiet >= quiet_steps and pos >= len(items):
            steady = True
            if stop_when_steady:
                break
    return LoopResult(rows, state, steady, violations)


def steps_to_converge(result: LoopResult, target: float, deadband: float):
    """First step index whose post-step mean lux is within the deadband and stays there."""
    lux = [r.state.mean_lux for r in result.rows[1:]] + [result.state.mean_lux]
    inside = [abs(v - target) <= deadband for v in lux]
    for k in range(len(inside)):
        if all(inside[k:]):
            return k
    return None


def convergence_bound(start_lux: float, target: float, deadband: float, gain: float, multiplier: int) -> int:
    return math.ceil(max(abs(target - start_lux) - deadband, 0) / (gain * multiplier)) + 2
