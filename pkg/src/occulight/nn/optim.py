"""Per-parameter update rules.

All rules act elementwise on lists of arrays. With gradient g at step t:

- sgd:      w -= lr * g
- rmsprop:  v = rho*v + (1-rho)*g^2;            w -= lr * g / (sqrt(v) + eps)
- adagrad:  G += g^2;                           w -= lr * g / (sqrt(G) + eps)
- adadelta: Eg = rho*Eg + (1-rho)*g^2;  d = -sqrt(Ed + eps)/sqrt(Eg + eps) * g
            Ed = rho*Ed + (1-rho)*d^2;          w += lr * d
- adam:     m, v moments; mh = m/(1-b1^t), vh = v/(1-b2^t); w -= lr*mh/(sqrt(vh)+eps)
- adamax:   m as adam; u = max(b2*u, |g|);      w -= lr/(1-b1^t) * m/(u+eps)
- nadam:    m, v as adam; mh = b1*m/(1-b1^(t+1)) + (1-b1)*g/(1-b1^t);
            vh = v/(1-b2^t);                    w -= lr*mh/(sqrt(vh)+eps)
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError

DEFAULTS = {
    "sgd": {"lr": 0.01},
    "rmsprop": {"lr": 0.001, "rho": 0.9, "eps": 1e-8},
    "adagrad": {"lr": 0.01, "eps": 1e-8},
    "adadelta": {"lr": 1.0, "rho": 0.95, "eps": 1e-6},
    "adam": {"lr": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "adamax": {"lr": 0.002, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "nadam": {"lr": 0.002, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
}
OPTIMIZERS = tuple(DEFAULTS)

_SLOTS = {
    "sgd": (), "rmsprop": ("v",), "adagrad": ("G",), "adadelta": ("Eg", "Ed"),
    "adam": ("m", "v"), "adamax": ("m", "u"), "nadam": ("m", "v"),
}


@dataclass
class OptimizerState:
    kind: str
    hyper: dict
    slots: dict = field(default_factory=dict)
    step_count: int = 0

    def step(self, params: list, grads: list) -> None:
        """Update ``params`` in place."""
        if len(params) != len(grads):
            raise ShapeError("params and grads lists differ in length")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ShapeError(f"parameter shape {p.shape} != gradient shape {g.shape}")
        if not self.slots:
            self.slots = {name: [np.zeros_like(p) for p in params] for name in _SLOTS[self.kind]}
        else:
            for name, accs in self.slots.items():
                if len(accs) != len(params) or any(a.shape != p.shape for a, p in zip(accs, params)):
                    raise ShapeError("optimizer state does not match parameter shapes")
        self.step_count += 1
        rule = _RULES[self.kind]
        for k, (p, g) in enumerate(zip(params, grads)):
            rule(self, k, p, g)


def make_optimizer(kind: str, **overrides) -> OptimizerState:
    kind = kind.lower()
    if kind not in DEFAULTS:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {', '.join(OPTIMIZERS)}")
    unknown = set(overrides) - set(DEFAULTS[kind])
    if unknown:
        raise ValueError(f"unknown {kind} hyperparameters: {sorted(unknown)}")
    return OptimizerState(kind, {**DEFAULTS[kind], **overrides})


def optimizer_step(state: OptimizerState, params: list, grads: list):
    """Pure form: returns (new_params, new_state), leaving the inputs intact."""
    new_state = copy.deepcopy(state)
    new_params = [np.array(p, dtype=float, copy=True) for p in params]
    new_state.step(new_params, [np.asarray(g, dtype=float) for g in grads])
    return new_params, new_state


def _sgd(s, k, p, g):
    p -= s.hyper["lr"] * g


def _rmsprop(s, k, p, g):
    h, v = s.hyper, s.slots["v"][k]
    v *= h["rho"]
    v += (1.0 - h["rho"]) * g * g
    p -= h["lr"] * g / (np.sqrt(v) + h["eps"])


def _adagrad(s, k, p, g):
    h, G = s.hyper, s.slots["G"][k]
    G += g * g
    p -= h["lr"] * g / (np.sqrt(G) + h["eps"])


def _adadelta(s, k, p, g):
    h, Eg, Ed = s.hyper, s.slots["Eg"][k], s.slots["Ed"][k]
    Eg *= h["rho"]
    Eg += (1.0 - h["rho"]) * g * g
    d = -np.sqrt(Ed + h["eps"]) / np.sqrt(Eg + h["eps"]) * g
    Ed *= h["rho"]
    Ed += (1.0 - h["rho"]) * d * d
    p += h["lr"] * d


def _moments(s, k, g):
    h, m, v = s.hyper, s.slots["m"][k], s.slots["v"][k]
    m *= h["beta1"]
    m += (1.0 - h["beta1"]) * g
    v *= h["beta2"]
    v += (1.0 - h["beta2"]) * g * g
    return m, v


def _adam(s, k, p, g):
    h, t = s.hyper, s.step_count
    m, v = _moments(s, k, g)
    mh = m / (1.0 - h["beta1"] ** t)
    vh = v / (1.0 - h["beta2"] ** t)
    p -= h["lr"] * mh / (np.sqrt(vh) + h["eps"])


def _adamax(s, k, p, g):
    h, t = s.hyper, s.step_count
    m, u = s.slots["m"][k], s.slots["u"][k]
    m *= h["beta1"]
    m += (1.0 - h["beta1"]) * g
    np.maximum(h["beta2"] * u, np.abs(g), out=u)
    p -= (h["lr"] / (1.0 - h["beta1"] ** t)) * m / (u + h["eps"])


def _nadam(s, k, p, g):
    h, t = s.hyper, s.step_count
    b1 = h["beta1"]
    m, v = _moments(s, k, g)
    mh = b1 * m / (1.0 - b1 ** (t + 1)) + (1.0 - b1) * g / (1.0 - b1 ** t)
    vh = v / (1.0 - h["beta2"] ** t)
    p -= h["lr"] * mh / (np.sqrt(vh) + h["eps"])


_RULES = {"sgd": _sgd, "rmsprop": _rmsprop, "adagrad": _adagrad, "adadelta": _adadelta,
          "adam": _adam, "adamax": _adamax, "nadam": _nadam}
