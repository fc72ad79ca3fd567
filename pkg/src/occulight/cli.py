"""``occulight`` command-line entry point.

Subcommands: gen-data, train, eval, simulate, hub. Exit codes: 0 success,
1 usage error, 2 data error, 3 invariant violation.

Run configuration files are flat ``key = value`` lines (``#`` comments).
Keys are ``<section>.<field>``:

- ``pose.*``     PoseGenConfig fields (joint_noise, turn_range, ...)
- ``face.*``     FaceGenConfig fields (landmark_noise, shape_jitter, ...)
- ``control.*``  ControlConfig fields (target_sitting, deadband, ...)
- ``plant.*``    gain, ambient
- ``sim.*``      max_steps, window_ms, posture_model, emotion_model
- ``eval.*``     folds, holdout
- ``nn.*``       architecture, epochs, batch_size, optimizer
- ``<model>.*``  hyperparameters of a classical model (``rfc.n_trees = 50``)

Command-line flags take precedence over file values.
"""
from __future__ import annotations

import argparse
import asyncio
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .classical import MODEL_NAMES, make_estimator
from .controller import ControlConfig, FrameClassifier, LightPlant, parse_scenario, run_automation_loop
from .dataset import Dataset, read_csv, write_csv
from .errors import OccuLightError
from .nn import OPTIMIZERS, NeuralNetClassifier
from .serialize import load_estimator, save_estimator
from .state import OccupancyCounter, RoomState
from .synth import FaceGenConfig, PoseGenConfig, emotion_dataset, posture_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3
TASK_DIMS = {"posture": 31, "emotion": 46}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------- config

_SIMPLE_SECTIONS = {
    "plant": {"gain": 40.0, "ambient": 0.0},
    "sim": {"max_steps": 100, "window_ms": 2000, "posture_model": "", "emotion_model": ""},
    "eval": {"folds": 10, "holdout": 0.3},
    "nn": {"architecture": "", "epochs": 300, "batch_size": 32, "optimizer": "adadelta"},
}


def _coerce(raw: str, like, key: str):
    try:
        if isinstance(like, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError
            return raw.lower() == "true"
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, tuple):
            return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError:
        raise DataError(f"config key {key}: cannot parse {raw!r} as {type(like).__name__}") from None
    return raw


def _guess(raw: str):
    if raw == "None":
        return None
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def load_run_config(path) -> dict:
    """Parse and validate a run configuration into ``{section: {field: value}}``."""
    out: dict = {}
    if not path:
        return out
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = (s.strip() for s in line.partition("="))
        section, dot, name = key.partition(".")
        if not sep or not dot or not name:
            raise DataError(f"{path}:{no}: expected '<section>.<key> = value'")
        if section in ("pose", "face", "control"):
            cls = {"pose": PoseGenConfig, "face": FaceGenConfig, "control": ControlConfig}[section]
            defaults = {f.name: f for f in dataclasses.fields(cls)}
            if name not in defaults or name in ("limbs", "intensity", "class_mix"):
                raise DataError(f"{path}:{no}: unknown key {key!r}")
            like = getattr(cls(), name)
            value = _coerce(raw, like, key)
        elif section in _SIMPLE_SECTIONS:
            if name not in _SIMPLE_SECTIONS[section]:
                raise DataError(f"{path}:{no}: unknown key {key!r}")
            value = _coerce(raw, _SIMPLE_SECTIONS[section][name], key)
        elif section in MODEL_NAMES:
            if name not in MODEL_NAMES[section]().get_params():
                raise DataError(f"{path}:{no}: {section} has no option {name!r}")
            value = _guess(raw)
        else:
            raise DataError(f"{path}:{no}: unknown section {section!r}")
        out.setdefault(section, {})[name] = value
    # validate module constraints eagerly
    try:
        PoseGenConfig(**out.get("pose", {})).validate()
        FaceGenConfig(**out.get("face", {})).validate()
        ControlConfig(**out.get("control", {})).validate()
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from None
    return out


def _section(cfg: dict, name: str) -> dict:
    return {**_SIMPLE_SECTIONS.get(name, {}), **cfg.get(name, {})}


# ---------------------------------------------------------------- helpers

def _load_dataset(path, task: str | None = None) -> Dataset:
    try:
        data = read_csv(path)
    except FileNotFoundError:
        raise DataError(f"dataset not found: {path}") from None
    if task is not None and data.n_features != TASK_DIMS[task]:
        raise DataError(f"{path}: task {task} expects {TASK_DIMS[task]} features, file has {data.n_features}")
    return data


def _summary(data: Dataset) -> str:
    counts = ", ".join(f"{n}={c}" for n, c in zip(data.class_names, data.class_counts()))
    return (f"rows={data.n_samples} features={data.n_features} subjects={len(set(data.subjects))} "
            f"classes: {counts}")


def _estimator(args, cfg: dict, task: str | None):
    """Template estimator from --model (name or model file) / --optimizer."""
    model = args.model
    if model and Path(model).is_file():
        return load_estimator(model)
    if model in (None, "nn") and (args.optimizer or model == "nn"):
        nn = _section(cfg, "nn")
        arch = nn["architecture"] or (task or "posture")
        if arch not in ("emotion", "posture"):
            arch = tuple(int(v) for v in arch.replace(",", " ").split())
        opt = (args.optimizer or nn["optimizer"]).lower()
        if opt not in OPTIMIZERS:
            raise UsageError(f"unknown optimizer {opt!r}; valid: {', '.join(OPTIMIZERS)}")
        return NeuralNetClassifier(arch, opt, epochs=args.epochs if args.epochs is not None else nn["epochs"],
                                   batch_size=args.batch if args.batch is not None else nn["batch_size"],
                                   random_state=args.seed)
    if model is None:
        raise UsageError(f"give --model ({', '.join(MODEL_NAMES)}, nn) or --optimizer")
    if model.lower() not in MODEL_NAMES:
        raise UsageError(f"unknown model {model!r}; valid names: {', '.join(MODEL_NAMES)}, nn")
    return make_estimator(model.lower(), cfg.get(model.lower(), {}), args.seed)


# ---------------------------------------------------------------- commands

def cmd_gen_data(args) -> int:
    cfg = load_run_config(args.config)
    section, cls, make = (("pose", PoseGenConfig, posture_dataset) if args.kind == "posture"
                          else ("face", FaceGenConfig, emotion_dataset))
    fields = dict(cfg.get(section, {}), seed=args.seed)
    if args.subjects is not None:
        fields["subjects"] = args.subjects
    if args.frames is not None:
        fields["frames_per_subject"] = args.frames
    data = make(cls(**fields))
    try:
        write_csv(data, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from None
    print(f"wrote {args.out}: {_summary(data)}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    data = _load_dataset(args.data, args.task)
    data.check_trainable()
    est = _estimator(args, cfg, args.task)
    est.fit(data.X, data.y)
    train_acc = float(np.mean(est.predict(data.X) == data.y))
    print(f"task: {args.task}")
    print(f"data: {args.data} ({_summary(data)})")
    print(f"model: {est.kind} {est.get_params()}")
    print(f"seed: {args.seed}")
    print(f"training accuracy: {train_acc:.4f}")
    if isinstance(est, NeuralNetClassifier):
        h = est.loss_history_
        print(f"epochs: {len(h)} initial loss: {est.initial_loss_:.6f} final loss: {h[-1] if h else float('nan'):.6f}")
        print("loss history: " + " ".join(f"{v:.6g}" for v in h))
    if args.model_out:
        try:
            save_estimator(est, args.model_out)
        except OSError as exc:
            raise DataError(f"cannot write {args.model_out}: {exc}") from None
        print(f"saved {args.model_out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_run_config(args.config)
    data = _load_dataset(args.data)
    task = {31: "posture", 46: "emotion"}.get(data.n_features)
    template = _estimator(args, cfg, task)
    evc = _section(cfg, "eval")
    folds = args.folds if args.folds is not None else evc["folds"]
    holdout = args.holdout if args.holdout is not None else evc["holdout"]
    reports = ev.evaluate_all(lambda: template, data, args.mode, folds, holdout, args.seed)
    name = args.model if args.model and not Path(args.model).is_file() else template.kind.lower()
    text = "\n\n".join(ev.format_report(f"{args.mode} {name} {problem}", rep) for problem, rep in reports.items())
    print(text)
    if args.report_out:
        base = Path(args.report_out)
        try:
            base.with_suffix(".txt").write_text(text + "\n", encoding="utf-8")
            base.with_suffix(".csv").write_text(ev.reports_to_csv(args.mode, name, reports), encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write reports: {exc}") from None
    if args.mode == "blind" and any(r.notes.get("subject_overlap") for r in reports.values()):
        print("invariant violated: train and blind subjects overlap", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read scenario: {exc}") from None
    items = parse_scenario(text)
    sim = _section(cfg, "sim")
    plant_cfg = _section(cfg, "plant")
    posture_model = load_estimator(sim["posture_model"]) if sim["posture_model"] else None
    emotion_model = load_estimator(sim["emotion_model"]) if sim["emotion_model"] else None
    control = ControlConfig(**cfg.get("control", {}))
    max_steps = args.max_steps if args.max_steps is not None else sim["max_steps"]
    result = run_automation_loop(items, control, LightPlant(gain=plant_cfg["gain"], ambient=plant_cfg["ambient"]),
                                 max_steps, FrameClassifier(posture_model, emotion_model),
                                 initial_state=RoomState(counter=OccupancyCounter(window_ms=sim["window_ms"])))
    if args.trace_out:
        try:
            Path(args.trace_out).write_text(result.to_csv(), encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write trace: {exc}") from None
    last = result.state
    print(f"steps: {len(result.rows)} steady: {result.steady}")
    print(f"final: {last.summary()}")
    for r in result.rows:
        for f in r.faults:
            print(f"step {r.step} fault: {f}", file=sys.stderr)
    if result.violations or any(r.state.occupancy < 0 for r in result.rows):
        for v in result.violations:
            print(f"invariant violated: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_hub(args) -> int:
    from .sensornet import Hub

    host, _, port = args.listen.rpartition(":")
    try:
        port_no = int(port)
    except ValueError:
        raise UsageError(f"--listen must be HOST:PORT, got {args.listen!r}") from None

    def show(line, state):
        print(f"{line} -> {state.summary()}", flush=True)

    async def main():
        hub = Hub(on_transition=show)
        try:
            addr = await hub.start(host or "127.0.0.1", port_no)
        except OSError as exc:
            raise DataError(f"cannot bind {args.listen}: {exc}") from None
        print(f"hub listening on {addr[0]}:{addr[1]}", flush=True)
        try:
            if args.duration is not None:
                await asyncio.sleep(args.duration)
            else:
                await hub.serve_forever()
        finally:
            await hub.stop()
        if args.log_out:
            Path(args.log_out).write_bytes(b"".join(hub.arrival_log))

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="occulight", description="Occupant-aware lighting pipeline.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    g.add_argument("--kind", choices=("posture", "emotion"), required=True)
    g.add_argument("--subjects", type=int)
    g.add_argument("--frames", type=int)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train and save a model")
    t.add_argument("--task", choices=tuple(TASK_DIMS), required=True)
    t.add_argument("--model", help=f"one of {', '.join(MODEL_NAMES)}, nn")
    t.add_argument("--optimizer", help=f"neural-net optimizer: {', '.join(OPTIMIZERS)}")
    t.add_argument("--data", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--model-out")
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="cross-validation or subject-held-out blind test")
    e.add_argument("--mode", choices=("cv", "blind"), required=True)
    e.add_argument("--folds", type=int)
    e.add_argument("--holdout", type=float)
    e.add_argument("--data", required=True)
    e.add_argument("--model", help="model name or saved model file")
    e.add_argument("--optimizer")
    e.add_argument("--epochs", type=int)
    e.add_argument("--batch", type=int)
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--report-out", help="path prefix for .txt and .csv reports")
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", help="run a closed-loop scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--config")
    s.add_argument("--trace-out")
    s.add_argument("--max-steps", type=int)
    s.set_defaults(func=cmd_simulate)

    h = sub.add_parser("hub", help="run the sensor hub")
    h.add_argument("--listen", required=True, help="HOST:PORT")
    h.add_argument("--duration", type=float, help="stop after this many seconds")
    h.add_argument("--log-out", help="write the arrival log here on exit")
    h.set_defaults(func=cmd_hub)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"occulight: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OccuLightError, OSError) as exc:
        print(f"occulight: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
