"""Independent reference implementations shared by the unit and acceptance tests."""
import itertools
import math

import numpy as np

from occulight.sensornet import Ack, Action, Command, Event, SensorType

PIR_WINDOW_MS = 2000


def scalar_updates(kind, w, grads, **hp):
    """Apply ``kind`` to one scalar weight for the gradient sequence ``grads``."""
    lr = hp["lr"]
    m = v = acc = ed = u = 0.0
    for t, g in enumerate(grads, start=1):
        if kind == "sgd":
            w = w - lr * g
        elif kind == "rmsprop":
            v = hp["rho"] * v + (1 - hp["rho"]) * g * g
            w = w - lr * g / (math.sqrt(v) + hp["eps"])
        elif kind == "adagrad":
            acc = acc + g * g
            w = w - lr * g / (math.sqrt(acc) + hp["eps"])
        elif kind == "adadelta":
            acc = hp["rho"] * acc + (1 - hp["rho"]) * g * g
            dx = -math.sqrt(ed + hp["eps"]) / math.sqrt(acc + hp["eps"]) * g
            ed = hp["rho"] * ed + (1 - hp["rho"]) * dx * dx
            w = w + lr * dx
        else:
            b1, b2, eps = hp["beta1"], hp["beta2"], hp["eps"]
            m = b1 * m + (1 - b1) * g
            if kind == "adamax":
                u = max(b2 * u, abs(g))
                w = w - (lr / (1 - b1 ** t)) * m / (u + eps)
                continue
            v = b2 * v + (1 - b2) * g * g
            vhat = v / (1 - b2 ** t)
            if kind == "adam":
                mhat = m / (1 - b1 ** t)
            else:  # nadam
                mhat = b1 * m / (1 - b1 ** (t + 1)) + (1 - b1) * g / (1 - b1 ** t)
            w = w - lr * mhat / (math.sqrt(vhat) + eps)
    return w


def _mean_loss(head, z, onehot):
    """Per-replica mean cross-entropy from head logits of shape (R, n, out)."""
    if head == "sigmoid":
        return np.mean(np.logaddexp(0.0, z[..., 0]) - onehot[..., 0] * z[..., 0], axis=-1)
    zmax = z.max(axis=-1, keepdims=True)
    lse = zmax[..., 0] + np.log(np.exp(z - zmax).sum(axis=-1))
    return np.mean(lse - np.sum(onehot * z, axis=-1), axis=-1)


def _replay(net, X, masks, dtype, start=None, z_start=None):
    """Own DAG evaluator in ``dtype``. With ``start`` set, node ``start``'s
    pre-activation is replaced by the stacked replicas ``z_start`` (R, n, out)
    and all activations gain a leading replica axis. Returns per-node
    activations and pre-activations."""
    X = X.astype(dtype)
    acts, pre = {0: X if start is None else np.broadcast_to(X, (z_start.shape[0],) + X.shape)}, {}
    for i, node in enumerate(net.nodes[1:], start=1):
        if node.kind == "dense":
            W, b = (p.astype(dtype) for p in net.params[i])
            z = z_start if i == start else acts[node.inputs[0]] @ W + b
            pre[i] = z
            acts[i] = np.maximum(z, 0.0) if node.activation == "relu" else z
        elif node.kind == "dropout":
            a = acts[node.inputs[0]]
            acts[i] = a * masks[i].astype(dtype) if i in masks else a
        else:
            acts[i] = np.concatenate([acts[j] for j in node.inputs], axis=-1)
    return acts, pre


def _differences(net, X, onehot, masks, i, is_bias, coords, h, dtype, block=512):
    """Central differences for the given (row, col) / (col,) entries of dense node ``i``."""
    acts, pre = _replay(net, X, masks, dtype)
    x_in, z0 = acts[net.nodes[i].inputs[0]], pre[i]
    onehot = onehot.astype(dtype)
    h = dtype(h)
    out = np.empty(len(coords), dtype=dtype)
    for lo in range(0, len(coords), block):
        chunk = coords[lo:lo + block]
        zs = np.repeat(z0[None], 2 * len(chunk), axis=0)
        for k, idx in enumerate(chunk):
            col = np.ones(len(X), dtype=dtype) if is_bias else x_in[:, idx[0]]   # dz[:, c] per unit step
            c = idx[-1]
            zs[2 * k, :, c] += h * col
            zs[2 * k + 1, :, c] -= h * col
        _, p = _replay(net, X, masks, dtype, i, zs)
        L = _mean_loss(net.head, p[len(net.nodes) - 1], onehot)
        out[lo:lo + len(chunk)] = (L[0::2] - L[1::2]) / (2 * h)
    return out


def numeric_gradients(net, X, y, masks, h=1e-5, refine_below=1e-6):
    """Central differences for every parameter, aligned with ``net.parameters()``.

    ``masks`` are the dropout masks of the analytic pass, so both sides see
    the same stochastic network. Entries whose float64 difference is nonzero
    but below ``refine_below`` are roundoff-limited (loss ~ 1, step 2h) and
    are recomputed in extended precision.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    onehot = y.reshape(-1, 1).astype(float) if net.head == "sigmoid" else np.eye(net.output_dim)[y]
    grads = []
    for i in net.dense_nodes:
        for is_bias, p in enumerate(net.params[i]):
            coords = list(np.ndindex(p.shape))
            g = _differences(net, X, onehot, masks, i, bool(is_bias), coords, h, np.float64)
            fine = [k for k in range(len(g)) if 0.0 < abs(g[k]) < refine_below]
            if fine:
                g[fine] = _differences(net, X, onehot, masks, i, bool(is_bias), [coords[k] for k in fine], h,
                                       np.longdouble)
            grads.append(g.reshape(p.shape))
    return grads


def max_relative_error(analytic, numeric):
    """Largest |a - n| / max(|a|, |n|, 1e-8) over all parameter entries."""
    worst = 0.0
    for a, m in zip(analytic, numeric):
        rel = np.abs(a - m) / np.maximum(np.maximum(np.abs(a), np.abs(m)), 1e-8)
        worst = max(worst, float(rel.max()))
    return worst


def concordance_auc(scores, truth):
    """Brute-force pair counting oracle: P(score_pos > score_neg), ties count half."""
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


def reference_count(pulses, window=PIR_WINDOW_MS):
    """Batch-scan oracle: pairs are greedy non-overlapping adjacent pulses of
    different sensors at most ``window`` apart; applied in order with a floor at 0."""
    count, i = 0, 0
    while i < len(pulses) - 1:
        (s0, t0), (s1, t1) = pulses[i], pulses[i + 1]
        if s0 != s1 and abs(t1 - t0) <= window:
            count = count + 1 if s1 == "PIR_IN" else max(count - 1, 0)
            i += 2
        else:
            i += 1
    return count


def random_message(rng):
    kind = rng.integers(3)
    if kind == 1:
        return Command(int(rng.integers(3)), list(Action)[rng.integers(4)])
    if kind == 2:
        return Ack(int(rng.integers(3)), int(rng.integers(11)))
    sensor = list(SensorType)[rng.integers(6)]
    node = "".join(rng.choice(list("abcXYZ019_.-"), int(rng.integers(1, 12))))
    ts = int(rng.integers(0, 2**62)) if rng.random() < 0.3 else int(rng.integers(0, 10**6))
    if sensor.lux_channel is not None:
        r = rng.random()
        value = float(rng.integers(0, 2000)) if r < 0.3 else round(float(rng.uniform(0, 1000)), int(rng.integers(0, 4))) \
            if r < 0.6 else float(rng.exponential(500)) if r < 0.95 else float(rng.uniform(0, 1e-6))
    elif sensor is SensorType.DOOR:
        value = int(rng.integers(2))
    else:
        value = 1
    return Event(node, sensor, value, ts)


def mutate(raw: bytes, rng) -> bytes:
    b = bytearray(raw)
    op = rng.integers(6)
    if op == 0 and len(b) > 1:
        del b[int(rng.integers(len(b))):]                     # truncate
    elif op == 1:
        b[int(rng.integers(len(b)))] = int(rng.integers(256))  # byte flip
    elif op == 2:
        b.insert(int(rng.integers(len(b) + 1)), int(rng.choice(list(b" \n-.0a\x00\xff"))))
    elif op == 3 and len(b) > 1:
        del b[int(rng.integers(len(b)))]
    elif op == 4:
        i, j = sorted(rng.integers(0, len(b) + 1, 2))
        b[i:i] = b[i:j]                                        # duplicate a slice
    else:
        toks = bytes(b).rstrip(b"\n").split(b" ")
        rng.shuffle(toks)
        b = bytearray(b" ".join(toks) + b"\n")
    return bytes(b)
