import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from occulight.controller import (ControlConfig, FrameDirective, LightPlant, control_step, convergence_bound,
                                  parse_scenario, run_automation_loop, steps_to_converge, target_lux)
from occulight.errors import ScenarioError
from occulight.face import EmotionLabel
from occulight.sensornet import Action, Command, Event, SensorType
from occulight.skeleton import PostureLabel
from occulight.state import OccupancyCounter, RoomState

CFG = ControlConfig()


def occupied(posture=PostureLabel.SITTING, emotion=EmotionLabel.NEUTRAL, lux=0.0, levels=(0, 0, 0)):
    return RoomState(counter=OccupancyCounter(count=1), lux=(lux,) * 3, levels=levels, posture=posture,
                     emotion=emotion)


def fixed_labels(d: FrameDirective):
    """Classifier stub mapping directives straight to their requested class."""
    return PostureLabel(d.label) if d.kind == "posture" else EmotionLabel(d.label)


ENTRY = [Event("pir", SensorType.PIR_OUT, 1, 0), Event("pir", SensorType.PIR_IN, 1, 400)]


def entry_script(posture, emotion):
    return ENTRY + [FrameDirective("posture", posture.value, 1, 500), FrameDirective("emotion", emotion.value, 2, 500)]


# ---- policy

def test_target_lux_defaults_and_override():
    assert target_lux(PostureLabel.STANDING) == 400
    assert target_lux(PostureLabel.SITTING) == 300
    assert target_lux(PostureLabel.LYING_DOWN) == 100
    assert target_lux(None) is None
    assert target_lux(PostureLabel.STANDING, ControlConfig(target_standing=500)) == 500


def test_control_step_examples():
    vacant = RoomState(levels=(4, 4, 4), lux=(480.0,) * 3)
    assert control_step(vacant) == [Command(i, Action.POWER_OFF) for i in range(3)]
    assert control_step(occupied(emotion=EmotionLabel.COMFORTABLE, lux=300.0)) == []
    assert control_step(occupied(emotion=EmotionLabel.UNCOMFORTABLE, lux=100.0)) == \
        [Command(0, Action.INT_UP), Command(1, Action.INT_UP)]
    assert control_step(occupied(lux=900.0, levels=(3, 9, 9))) == [Command(1, Action.INT_DOWN)]
    assert control_step(occupied(posture=None)) == [Command(i, Action.POWER_ON) for i in range(3)]
    assert control_step(occupied(lux=260.0)) == []                 # inside deadband
    assert control_step(occupied(emotion=None, lux=0.0)) == [Command(0, Action.INT_UP)]  # unknown = neutral
    assert control_step(occupied(lux=0.0, levels=(10, 10, 10))) == []  # saturated


@given(st.sampled_from(list(PostureLabel)), st.floats(0, 2000), st.lists(st.integers(0, 10), min_size=3, max_size=3))
def test_hold_property(posture, lux, levels):
    cmds = control_step(occupied(posture, EmotionLabel.COMFORTABLE, lux, tuple(levels)))
    assert not any(c.action in (Action.INT_UP, Action.INT_DOWN) for c in cmds)


@given(st.integers(0, 3), st.sampled_from([None, *PostureLabel]), st.sampled_from([None, *EmotionLabel]),
       st.floats(0, 2000), st.lists(st.integers(0, 10), min_size=3, max_size=3))
def test_policy_safety_and_bounds(count, posture, emotion, lux, levels):
    state = RoomState(counter=OccupancyCounter(count=count), lux=(lux,) * 3, levels=tuple(levels),
                      posture=posture, emotion=emotion)
    cmds = control_step(state)
    if count == 0:
        assert all(c.action is Action.POWER_OFF for c in cmds)
        assert [c.light_id for c in cmds] == [i for i, v in enumerate(levels) if v > 0]
    assert len(cmds) <= max(CFG.mult_uncomfortable, 3)


def test_config_validation():
    for bad in (ControlConfig(target_sitting=0), ControlConfig(deadband=-1), ControlConfig(step_ms=0),
                ControlConfig(mult_neutral=-1)):
        with pytest.raises(ValueError):
            bad.validate()


# ---- plant

@given(st.lists(st.tuples(st.integers(0, 2), st.sampled_from(list(Action))), max_size=200))
def test_plant_levels_saturate(cmds):
    plant = LightPlant(gain=40.0, ambient=25.0)
    for light, action in cmds:
        before = plant.levels[light]
        ack = plant.apply(Command(light, action))
        after = plant.levels[light]
        assert 0 <= after <= 10 and ack.level == after
        if action is Action.INT_UP:
            assert after == min(before + 1, 10)
        elif action is Action.INT_DOWN:
            assert after == max(before - 1, 0)
    assert plant.measured_lux() == 25.0 + 40.0 * sum(plant.levels)


# ---- closed loop

def test_entry_sit_uncomfortable_converges_and_holds():
    res = run_automation_loop(entry_script(PostureLabel.SITTING, EmotionLabel.UNCOMFORTABLE),
                              max_steps=60, stop_when_steady=False, classifier=fixed_labels)
    k = steps_to_converge(res, 300, 50)
    assert k is not None and k <= 20
    assert abs(res.state.mean_lux - 300) <= 50
    assert all(not r.commands for r in res.rows[k + 2:])
    assert res.steady and not res.violations


def test_default_classifier_end_to_end():
    res = run_automation_loop(entry_script(PostureLabel.SITTING, EmotionLabel.UNCOMFORTABLE), max_steps=40)
    assert res.state.posture is PostureLabel.SITTING and res.state.emotion is EmotionLabel.UNCOMFORTABLE
    assert abs(res.state.mean_lux - 300) <= 50 and res.steady


@pytest.mark.parametrize("posture", list(PostureLabel))
@pytest.mark.parametrize("emotion", [EmotionLabel.UNCOMFORTABLE, EmotionLabel.NEUTRAL])
@pytest.mark.parametrize("start_levels", [(0, 0, 0), (10, 10, 10), (7, 2, 5)])
def test_convergence_within_bound(posture, emotion, start_levels):
    plant = LightPlant(list(start_levels))
    start = plant.measured_lux()
    target = target_lux(posture)
    script = [FrameDirective("posture", posture.value, 1, 0), FrameDirective("emotion", emotion.value, 2, 0)]
    res = run_automation_loop(script, plant=plant, max_steps=80, stop_when_steady=False,
                              classifier=fixed_labels,
                              initial_state=RoomState(counter=OccupancyCounter(count=1)))
    k = steps_to_converge(res, target, CFG.deadband)
    bound = convergence_bound(start, target, CFG.deadband, plant.gain, CFG.multiplier(emotion))
    assert k is not None and k <= bound
    quiet_from = next(i for i in range(len(res.rows)) if all(not r.commands for r in res.rows[i:]))
    assert quiet_from <= bound


def test_convergence_bound_arithmetic():
    assert convergence_bound(0, 300, 50, 40, 2) == math.ceil(250 / 80) + 2 == 6
    assert convergence_bound(300, 300, 50, 40, 1) == 2


def test_vacancy_turns_lights_off_within_one_step():
    script = entry_script(PostureLabel.STANDING, EmotionLabel.NEUTRAL) + [
        Event("pir", SensorType.PIR_IN, 1, 20_000), Event("pir", SensorType.PIR_OUT, 1, 20_300)]
    res = run_automation_loop(script, max_steps=60, classifier=fixed_labels)
    zero_at = next(r.step for r in res.rows if r.step > 1 and r.state.occupancy == 0)
    assert sum(res.rows[zero_at - 1].state.levels) > 0
    assert res.rows[zero_at].commands and all(c.action is Action.POWER_OFF for c in res.rows[zero_at].commands)
    assert res.rows[zero_at + 1].state.levels == (0, 0, 0)
    assert res.state.levels == (0, 0, 0) and res.steady


def test_empty_room_is_steady_immediately():
    res = run_automation_loop([], max_steps=10)
    assert res.steady and res.state.levels == (0, 0, 0) and len(res.rows) == 3
    res = run_automation_loop([], plant=LightPlant([3, 0, 9]), max_steps=10)
    assert res.rows[0].commands == (Command(0, Action.POWER_OFF), Command(2, Action.POWER_OFF))
    assert res.rows[1].state.levels == (0, 0, 0)


def test_negative_occupancy_attempts_clamp():
    script = []
    for k in range(5):
        script += [Event("pir", SensorType.PIR_IN, 1, 1000 * k), Event("pir", SensorType.PIR_OUT, 1, 1000 * k + 300)]
    res = run_automation_loop(script, max_steps=20)
    assert all(r.state.occupancy == 0 for r in res.rows) and not res.violations


def test_faults_are_recorded_not_raised():
    script = ENTRY + [Event("pir", SensorType.PIR_IN, 1, 1000)]
    bad = [FrameDirective("posture", "Sitting", 0, 500)]

    def broken(_):
        raise RuntimeError("model offline")
    res = run_automation_loop(script + bad, max_steps=5, classifier=broken)
    assert any("model offline" in f for r in res.rows for f in r.faults)


def test_determinism_and_trace_csv():
    script = entry_script(PostureLabel.STANDING, EmotionLabel.UNCOMFORTABLE)
    a = run_automation_loop(script, max_steps=30)
    b = run_automation_loop(script, max_steps=30)
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().splitlines()
    assert lines[0] == "step,ts,occupancy,posture,emotion,lux0,lux1,lux2,commands"
    assert "CMD 0 INT_UP;CMD 1 INT_UP" in a.to_csv()


def random_scenario(rng, steps, step_ms=1000):
    items, t = [], 0
    while t < steps * step_ms:
        t += int(rng.integers(50, 3000))
        r = rng.random()
        if r < 0.6:
            s = "PIR_IN" if rng.random() < 0.5 else "PIR_OUT"
            items.append(Event("pir", SensorType(s), 1, t))
        elif r < 0.7:
            items.append(Event("door", SensorType.DOOR, int(rng.integers(2)), t))
        elif r < 0.85:
            items.append(FrameDirective("posture", list(PostureLabel)[rng.integers(3)].value, int(rng.integers(1e6)), t))
        else:
            items.append(FrameDirective("emotion", list(EmotionLabel)[rng.integers(3)].value, int(rng.integers(1e6)), t))
    return items


def test_randomized_safety_ten_thousand_steps():
    rng = np.random.default_rng(77)
    script = random_scenario(rng, 10_000)
    res = run_automation_loop(script, max_steps=10_000, stop_when_steady=False, classifier=fixed_labels)
    assert len(res.rows) == 10_000 and not res.violations
    occupancies = [r.state.occupancy for r in res.rows]
    assert min(occupancies) == 0 and max(occupancies) >= 2
    for r in res.rows:
        if r.state.occupancy == 0:
            assert all(c.action is Action.POWER_OFF for c in r.commands)
        assert all(0 <= v <= 10 for v in r.state.levels)


# ---- scenario parsing

def test_parse_scenario():
    text = """# entry then sit
EVT pir PIR_OUT 1 0
EVT pir PIR_IN 1 400

FRAME posture Sitting 7
FRAME emotion Uncomfortable 8 900
"""
    items = parse_scenario(text)
    assert items[2] == FrameDirective("posture", "Sitting", 7, 400)
    assert items[3].ts == 900 and isinstance(items[0], Event)


@pytest.mark.parametrize("text,line", [
    ("EVT a DOOR 1 5\nEVT a DOOR 2 6\n", 2),
    ("EVT a DOOR 1 5\n\nCMD 0 INT_UP\n", 3),
    ("FRAME posture Flying 1\n", 1),
    ("FRAME mood Sitting 1\n", 1),
    ("FRAME posture Sitting x\n", 1),
    ("FRAME posture Sitting\n", 1),
    ("EVT a DOOR 1 500\n# c\nEVT a DOOR 0 100\n", 3),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(text)
    assert ei.value.line_no == line
