"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_positions  # noqa: E402
from oracles import (PIR_WINDOW_MS, concordance_auc, max_relative_error, mutate, numeric_gradients,  # noqa: E402
                     random_message, reference_count, scalar_updates)
from scipy.spatial.transform import Rotation  # noqa: E402

from occulight.classical import MODEL_NAMES, make_estimator  # noqa: E402
from occulight.controller import (FrameDirective, LightPlant, run_automation_loop,  # noqa: E402
                                  steps_to_converge)
from occulight.dataset import Dataset  # noqa: E402
from occulight.errors import ProtocolError  # noqa: E402
from occulight.evaluation import (blind_test, confusion_and_accuracy, roc_auc,  # noqa: E402
                                  stratified_kfold)
from occulight.face import EmotionLabel, FaceFrame, emotion_features, face_template  # noqa: E402
from occulight.nn import (DEFAULTS, OPTIMIZERS, NeuralNetClassifier, backward, build_emotion_net,  # noqa: E402
                          build_mlp, build_posture_net, dataset_loss, fit, forward, make_optimizer)
from occulight.sensornet import (Action, Event, SensorType, decode_message, encode_message,  # noqa: E402
                                 pir_update)
from occulight.skeleton import (Joint, PostureLabel, SkeletonFrame, from_spherical, posture_features,  # noqa: E402
                                rule_label_posture, to_spherical)
from occulight.state import OccupancyCounter  # noqa: E402
from occulight.synth import PoseGenConfig, emotion_dataset, gen_skeleton_dataset, posture_dataset  # noqa: E402

BLIND_SEED = 42
HOLDOUT = 0.3


def check(cond, message):
    if not cond:
        raise AssertionError(message)


# ---------------------------------------------------------------- 1

def criterion_geometry():
    rng = np.random.default_rng(101)
    worst = {"pose translation": 0.0, "face translation": 0.0, "spherical": 0.0, "polar": 0.0, "turn shift": 0.0}
    template = face_template()
    for _ in range(100):
        P = random_positions(rng)
        F = SkeletonFrame(P)
        f0 = posture_features(F)
        worst["pose translation"] = max(worst["pose translation"],
                                        np.max(np.abs(f0 - posture_features(F.translated(rng.uniform(-10, 10, 3))))))
        face = FaceFrame(template + rng.normal(0, 0.003, template.shape) + rng.uniform(-1, 1, 3))
        moved = face.translated(rng.uniform(-5, 5, 3))
        worst["face translation"] = max(worst["face translation"],
                                        np.max(np.abs(emotion_features(face) - emotion_features(moved))))
        for p in rng.uniform(-5, 5, (5, 3)):
            worst["spherical"] = max(worst["spherical"], np.max(np.abs(from_spherical(to_spherical(p)) - p)))
        # rotation about the vertical through the spine, by an independent rotation routine
        angle = rng.uniform(-179, 179)
        spine = P[Joint.SPINE]
        R = Rotation.from_euler("y", -angle, degrees=True).as_matrix()
        f1 = posture_features(SkeletonFrame((P - spine) @ R.T + spine))
        worst["polar"] = max(worst["polar"], np.max(np.abs(f0[0:30:2] - f1[0:30:2])))
        shift = (f1[30] - f0[30] - angle + 180.0) % 360.0 - 180.0
        worst["turn shift"] = max(worst["turn shift"], abs(shift))
    check(worst["pose translation"] <= 1e-9, f"posture translation error {worst['pose translation']:.2e}")
    check(worst["face translation"] <= 1e-12, f"face translation error {worst['face translation']:.2e}")
    check(worst["spherical"] <= 1e-9, f"spherical round-trip error {worst['spherical']:.2e}")
    check(worst["polar"] <= 1e-9, f"polar angle changed by {worst['polar']:.2e} under rotation")
    check(worst["turn shift"] <= 1e-9, f"turn angle shift off by {worst['turn shift']:.2e}")
    return "100 frames; worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


# ---------------------------------------------------------------- 2

def criterion_rule_fidelity():
    frames = gen_skeleton_dataset(PoseGenConfig(subjects=20, frames_per_subject=18, joint_noise=0.0, seed=7))
    labels = [lf.label for lf in frames]
    agree = sum(rule_label_posture(lf.frame) is lf.label for lf in frames)
    check(len(frames) >= 300, f"only {len(frames)} frames")
    check(set(labels) == set(PostureLabel), "not all classes generated")
    check(agree == len(frames), f"{len(frames) - agree} disagreements")
    counts = {lab.value: labels.count(lab) for lab in PostureLabel}
    return f"{agree}/{len(frames)} agree; {counts}"


# ---------------------------------------------------------------- 3

def criterion_posture():
    data = posture_dataset()
    check(data.X.shape == (540, 31), f"unexpected dataset shape {data.X.shape}")
    acc = {}
    for name in MODEL_NAMES:
        rep = blind_test(make_estimator(name, {}, BLIND_SEED), data, HOLDOUT, BLIND_SEED)
        check(rep.notes["subject_overlap"] == 0, "train and blind subjects overlap")
        acc[name] = rep.accuracy
    check(acc["rfc"] >= 0.95, f"RFC blind accuracy {acc['rfc']:.4f} < 0.95")
    low = {k: v for k, v in acc.items() if v < 0.80}
    check(not low, f"below 0.80: {low}")
    return "blind accuracy " + ", ".join(f"{k} {v:.3f}" for k, v in acc.items())


# ---------------------------------------------------------------- 4

def criterion_emotion():
    data = emotion_dataset()
    check(data.X.shape == (310, 46), f"unexpected dataset shape {data.X.shape}")
    est = NeuralNetClassifier("emotion", "adadelta", epochs=300, random_state=42)
    rep = blind_test(est, data, HOLDOUT, BLIND_SEED)
    check(rep.notes["subject_overlap"] == 0, "train and blind subjects overlap")
    check(rep.accuracy >= 0.90, f"blind accuracy {rep.accuracy:.4f} < 0.90")
    return f"adadelta, 300 epochs: blind accuracy {rep.accuracy:.4f} on {rep.matrix.sum()} frames"


# ---------------------------------------------------------------- 5

def criterion_gradients():
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        cases = ((build_emotion_net(3, seed=seed), rng.normal(size=(4, 46)), rng.integers(0, 3, 4)),
                 (build_emotion_net(2, seed=seed), rng.normal(size=(4, 46)), rng.integers(0, 2, 4)),
                 (build_posture_net(seed=seed), rng.normal(size=(4, 31)), rng.integers(0, 3, 4)))
        for net, X, y in cases:
            _, cache = forward(net, X, "train", seed)
            err = max_relative_error(backward(net, cache, y), numeric_gradients(net, X, y, cache.masks))
            check(err < 1e-4, f"seed {seed}, {net.head} head: relative error {err:.2e}")
            worst = max(worst, err)
    return f"10 seeds x (emotion 3-class, emotion 2-class, posture): worst relative error {worst:.2e}"


# ---------------------------------------------------------------- 6

def criterion_optimizers():
    w = np.array([1.0])
    make_optimizer("sgd", lr=0.1).step([w], [2 * w])
    check(abs(w[0] - 0.8) <= 1e-12, f"sgd example gave {w[0]}")
    w = np.array([0.0])
    make_optimizer("adam").step([w], [np.array([1.0])])
    # bias-corrected first step: m_hat = g, v_hat = g^2, so dw = -lr * g / (|g| + eps)
    check(abs(w[0] - (-0.001 / (1.0 + 1e-8))) <= 1e-12, f"adam example gave {w[0]}")
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-2, 0.5, (50, 2)), rng.normal(2, 0.5, (50, 2))])
    y = np.repeat([0, 1], 50)
    ratios = {}
    for kind in OPTIMIZERS:
        for w0, g in ((1.0, 2.0), (-0.3, 0.7), (2.5, -4.0)):
            w = np.array([w0])
            make_optimizer(kind).step([w], [np.array([g])])
            ref = scalar_updates(kind, w0, [g], **DEFAULTS[kind])
            check(abs(w[0] - ref) <= 1e-12, f"{kind} single step {w[0]!r} vs {ref!r}")
        net = build_mlp(2, (8,), 2, seed=0)
        before = dataset_loss(net, X, y)
        fit(net, (X, y), kind, epochs=200, batch_size=16, seed=0)
        ratios[kind] = dataset_loss(net, X, y) / before
        check(ratios[kind] < 0.1, f"{kind} loss ratio {ratios[kind]:.3f}")
    return "single steps exact; final/initial loss " + ", ".join(f"{k} {v:.1e}" for k, v in ratios.items())


# ---------------------------------------------------------------- 7

def criterion_evaluation():
    rng = np.random.default_rng(7)
    for _ in range(200):
        C, n = int(rng.integers(2, 6)), int(rng.integers(1, 200))
        rep = confusion_and_accuracy(rng.integers(0, C, n), rng.integers(0, C, n), C)
        check(rep.matrix.sum() == n and rep.accuracy == np.trace(rep.matrix) / n, "trace/total identity broken")
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 20))
        truth = rng.integers(0, 2, n)
        truth[:2] = (0, 1)
        scores = rng.integers(0, 5, n) / 4.0 if rng.random() < 0.5 else rng.random(n)
        worst = max(worst, abs(roc_auc(scores, truth).auc - concordance_auc(scores, truth)))
    check(worst <= 1e-12, f"AUC differs from pair counting by {worst:.2e}")
    check(roc_auc([0.9, 0.7, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0, "separable AUC is not 1.0")
    check(roc_auc([0.4] * 6, [1, 0, 0, 1, 1, 0]).auc == 0.5, "constant-score AUC is not 0.5")
    for trial in range(50):
        counts = rng.integers(10, 60, int(rng.integers(2, 4)))
        y = np.repeat(np.arange(len(counts)), counts)
        data = Dataset(rng.normal(size=(len(y), 2)), y, [f"s{i % 5}" for i in range(len(y))],
                       tuple(f"c{i}" for i in range(len(counts))))
        tests = np.concatenate([t for _, t in stratified_kfold(data, 10, trial)])
        check(np.array_equal(np.sort(tests), np.arange(len(y))), "folds do not partition the indices")
    return f"200 confusion identities; 200 AUC instances, worst gap {worst:.1e}; 50 fold partitions"


# ---------------------------------------------------------------- 8

def _fold(pulses):
    c = OccupancyCounter(window_ms=PIR_WINDOW_MS)
    for p in pulses:
        c, _ = pir_update(c, p)
        check(c.count >= 0, "negative occupancy")
    return c.count


def criterion_occupancy():
    n_seq = 0
    for seq in itertools.product(("IN", "OUT", "GAP"), repeat=6):
        t, pulses = 0, []
        for tok in seq:
            t += PIR_WINDOW_MS + 1 if tok == "GAP" else 500
            if tok != "GAP":
                pulses.append(("PIR_" + tok, t))
        check(_fold(pulses) == reference_count(pulses), f"mismatch on {seq}")
        n_seq += 1
    rng = np.random.default_rng(8)
    for _ in range(1000):
        ts = np.cumsum(rng.choice([100, 700, 1900, 2000, 2001, 5000], 1000))
        pulses = [("PIR_IN" if s else "PIR_OUT", int(t)) for s, t in zip(rng.integers(0, 2, 1000), ts)]
        check(_fold(pulses) == reference_count(pulses), "random stream mismatch")
    return f"{n_seq} exhaustive sequences and 1000 streams of 1000 pulses match the reference"


# ---------------------------------------------------------------- 9

def criterion_protocol():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        m = random_message(rng)
        check(decode_message(encode_message(m)) == m, f"round trip failed for {m}")
    rejected = accepted = 0
    for _ in range(10_000):
        raw = mutate(encode_message(random_message(rng)), rng)
        try:
            m = decode_message(raw)
        except ProtocolError:
            rejected += 1
            continue
        check(decode_message(encode_message(m)) == m, f"accepted mutation {raw!r} does not round-trip")
        accepted += 1
    return f"10000 round trips; 10000 mutations: {rejected} parse errors, {accepted} still valid, 0 crashes"


# ---------------------------------------------------------------- 10

def criterion_closed_loop():
    entry = [Event("pir", SensorType.PIR_OUT, 1, 0), Event("pir", SensorType.PIR_IN, 1, 400),
             FrameDirective("posture", "Sitting", 11, 500), FrameDirective("emotion", "Uncomfortable", 12, 500)]
    res = run_automation_loop(entry, max_steps=60, stop_when_steady=False)
    k = steps_to_converge(res, 300, 50)
    check(res.state.posture is PostureLabel.SITTING and res.state.emotion is EmotionLabel.UNCOMFORTABLE,
          "scenario frames misclassified")
    check(k is not None and k <= 20, f"converged at step {k}")
    check(all(not r.commands for r in res.rows[k + 1:]), "commands after convergence")
    leave = entry + [Event("pir", SensorType.PIR_IN, 1, 15_000), Event("pir", SensorType.PIR_OUT, 1, 15_400)]
    out = run_automation_loop(leave, max_steps=60)
    zero = next(r.step for r in out.rows if r.step > 0 and r.state.occupancy == 0)
    check(out.rows[zero + 1].state.levels == (0, 0, 0), "lights still on one step after vacancy")
    rng = np.random.default_rng(77)
    items, t = [], 0
    while t < 10_000_000:
        t += int(rng.integers(50, 3000))
        r = rng.random()
        if r < 0.6:
            items.append(Event("pir", SensorType.PIR_IN if rng.random() < 0.5 else SensorType.PIR_OUT, 1, t))
        elif r < 0.7:
            items.append(Event("door", SensorType.DOOR, int(rng.integers(2)), t))
        elif r < 0.85:
            items.append(FrameDirective("posture", list(PostureLabel)[rng.integers(3)].value, int(rng.integers(1e6)), t))
        else:
            items.append(FrameDirective("emotion", list(EmotionLabel)[rng.integers(3)].value, int(rng.integers(1e6)), t))
    long = run_automation_loop(items, plant=LightPlant(), max_steps=10_000, stop_when_steady=False)
    int_at_zero = sum(1 for r in long.rows if r.state.occupancy == 0
                      and any(c.action in (Action.INT_UP, Action.INT_DOWN) for c in r.commands))
    check(len(long.rows) == 10_000 and int_at_zero == 0 and not long.violations, "intensity command at occupancy 0")
    vacant = sum(r.state.occupancy == 0 for r in long.rows)
    return (f"300 lx band reached at step {k} (final {res.state.mean_lux:g} lx); off {zero + 1 - zero} step after "
            f"vacancy; 10000 random steps ({vacant} vacant) with no intensity command at occupancy 0")


CRITERIA = [
    (1, "geometry suite", criterion_geometry, 5.0),
    (2, "rule-labeler fidelity", criterion_rule_fidelity, None),
    (3, "posture classification", criterion_posture, 60.0),
    (4, "emotion classification", criterion_emotion, 120.0),
    (5, "gradient check", criterion_gradients, 30.0),
    (6, "optimizer suite", criterion_optimizers, None),
    (7, "evaluation correctness", criterion_evaluation, None),
    (8, "occupancy counting", criterion_occupancy, None),
    (9, "protocol fuzzing", criterion_protocol, None),
    (10, "closed loop", criterion_closed_loop, None),
]


def run_criterion(number, title, func, limit):
    t0 = time.perf_counter()
    try:
        detail = func()
        elapsed = time.perf_counter() - t0
        if limit is not None and elapsed >= limit:
            raise AssertionError(f"runtime {elapsed:.1f}s exceeds {limit:.0f}s")
        ok = True
    except AssertionError as exc:
        elapsed = time.perf_counter() - t0
        detail, ok = str(exc), False
    budget = f" (limit {limit:.0f}s)" if limit else ""
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail} [{elapsed:.1f}s{budget}]"
    return ok, line


@pytest.mark.parametrize("number,title,func,limit", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_acceptance(number, title, func, limit, capsys):
    ok, line = run_criterion(number, title, func, limit)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
