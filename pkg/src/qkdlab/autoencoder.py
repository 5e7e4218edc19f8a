"""from-scratch bottleneck regressor for session outcome prediction.

a small fully connected network (encoder-bottleneck-decoder shape, ReLU
hidden activations, linear output) maps session features
[log10 initial length, attempt index, estimated error rate] to
[true error rate, final key length / initial length].  everything is plain
numpy: initialization, forward, backprop, Adam, and the L1 penalty are
implemented here so the gradients can be audited against finite
differences.

inputs and targets are z-scored with statistics fitted on the training
split only; predictions are mapped back to target units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_HIDDEN = (32, 8, 32)


@dataclass
class TrainConfig:
    lr: float = 0.001
    epochs: int = 100
    batch_size: int = 64
    l1: float = 0.0
    seed: int = 0
    pretrain_epochs: int = 0  # optional unsupervised reconstruction warm start

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("lr must be positive, epochs and batch_size at least 1")
        if self.l1 < 0 or self.pretrain_epochs < 0:
            raise ValueError("l1 and pretrain_epochs must be nonnegative")


@dataclass
class TrainingRecord:
    epoch: int
    loss: float


@dataclass
class AutoencoderModel:
    layer_sizes: list
    weights: list  # W_l of shape (size_{l+1}, size_l)
    biases: list  # b_l of shape (size_{l+1},)
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    target_mean: np.ndarray
    target_scale: np.ndarray
    loss_trace: list = field(default_factory=list)


def init_model(layer_sizes, seed: int = 0) -> AutoencoderModel:
    """uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError("need at least input and output layer, all sizes >= 1")
    rng = np.random.default_rng(int(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    d_in, d_out = sizes[0], sizes[-1]
    return AutoencoderModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        feature_mean=np.zeros(d_in),
        feature_scale=np.ones(d_in),
        target_mean=np.zeros(d_out),
        target_scale=np.ones(d_out),
    )


def _forward_normalized(model: AutoencoderModel, xn: np.ndarray):
    """forward pass on normalized inputs; returns activations per layer."""
    acts = [xn]
    a = xn
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        a = z if l == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts


PREDICT_CHUNK = 32768  # keep per-tile activations cache-resident for huge batches


def predict(model: AutoencoderModel, features: np.ndarray) -> np.ndarray:
    """end-to-end prediction in original units for a (batch, d_in) array."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    xn = (x - model.feature_mean) / model.feature_scale
    if xn.shape[0] <= PREDICT_CHUNK:
        yn = _forward_normalized(model, xn)[-1]
    else:
        yn = np.empty((xn.shape[0], model.biases[-1].size))
        for lo in range(0, xn.shape[0], PREDICT_CHUNK):
            yn[lo:lo + PREDICT_CHUNK] = _forward_normalized(
                model, xn[lo:lo + PREDICT_CHUNK])[-1]
    return yn * model.target_scale + model.target_mean


def predict_session(model: AutoencoderModel, features) -> tuple[float, float]:
    """(predicted error rate, predicted final key length / initial length)."""
    out = predict(model, np.asarray(features, dtype=float).reshape(1, -1))[0]
    return float(out[0]), float(out[1])


def loss_and_gradients(model: AutoencoderModel, xn: np.ndarray, yn: np.ndarray, l1: float = 0.0):
    """mean squared error (plus l1 * sum|W|) and its exact gradients.

    operates in normalized units; returns (loss, grad_weights, grad_biases).
    """
    batch, d_out = yn.shape
    acts = _forward_normalized(model, xn)
    pred = acts[-1]
    resid = pred - yn
    loss = float(np.mean(resid**2))
    if l1 > 0.0:
        loss += l1 * float(sum(np.abs(w).sum() for w in model.weights))

    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    delta = 2.0 * resid / (batch * d_out)
    for l in range(len(model.weights) - 1, -1, -1):
        grad_w[l] = delta.T @ acts[l]
        grad_b[l] = delta.sum(axis=0)
        if l1 > 0.0:
            grad_w[l] = grad_w[l] + l1 * np.sign(model.weights[l])
        if l > 0:
            delta = (delta @ model.weights[l]) * (acts[l] > 0.0)
    return loss, grad_w, grad_b


class _Adam:
    """standard Adam state over a list of parameter arrays."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _as_xy(dataset):
    """accept a list of (features, targets) pairs or an (X, Y) pair of arrays."""
    if isinstance(dataset, tuple) and len(dataset) == 2:
        x, y = dataset
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    xs, ys = zip(*dataset)
    return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


def _fit_stats(a: np.ndarray):
    mean = a.mean(axis=0)
    scale = a.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    return mean, scale


def _run_epochs(model, xn, yn, config, epochs, rng, record_into=None):
    adam = _Adam(model.weights + model.biases, config.lr)
    n = xn.shape[0]
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for at in range(0, n, config.batch_size):
            idx = order[at : at + config.batch_size]
            _, gw, gb = loss_and_gradients(model, xn[idx], yn[idx], config.l1)
            adam.step(model.weights + model.biases, gw + gb)
        if record_into is not None:
            full_loss, _, _ = loss_and_gradients(model, xn, yn, 0.0)
            record_into.append(TrainingRecord(epoch=epoch, loss=full_loss))


def train(dataset, config: TrainConfig | None = None, layer_sizes=None):
    """fit a model on (features, targets) data; returns (model, records).

    records holds one entry per epoch with the full-training-set mean
    squared error in normalized units, measured after the epoch's updates.
    """
    if config is None:
        config = TrainConfig()
    x, y = _as_xy(dataset)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("dataset must provide matching nonempty feature/target rows")
    if layer_sizes is None:
        layer_sizes = [x.shape[1], *DEFAULT_HIDDEN, y.shape[1]]
    if layer_sizes[0] != x.shape[1] or layer_sizes[-1] != y.shape[1]:
        raise ValueError("layer sizes do not match the data dimensions")

    model = init_model(layer_sizes, seed=config.seed)
    model.feature_mean, model.feature_scale = _fit_stats(x)
    model.target_mean, model.target_scale = _fit_stats(y)
    xn = (x - model.feature_mean) / model.feature_scale
    yn = (y - model.target_mean) / model.target_scale

    rng = np.random.default_rng(int(config.seed))
    if config.pretrain_epochs > 0:
        # reconstruction warm start: temporary head mapping back to the input
        pre = init_model(layer_sizes[:-1] + [layer_sizes[0]], seed=config.seed)
        pre.weights[:-1] = [w for w in model.weights[:-1]]
        pre.biases[:-1] = [b for b in model.biases[:-1]]
        _run_epochs(pre, xn, xn, config, config.pretrain_epochs, rng)
        model.weights[:-1] = pre.weights[:-1]
        model.biases[:-1] = pre.biases[:-1]

    records: list[TrainingRecord] = []
    _run_epochs(model, xn, yn, config, config.epochs, rng, record_into=records)
    model.loss_trace = [(r.epoch, r.loss) for r in records]
    return model, records


def evaluate(model: AutoencoderModel, test_set, band: float = 0.05, target_index=None,
             eps_floor: float = 0.01):
    """(accuracy, mse) on held-out data.

    a scalar prediction is correct when |pred - true| <= band * max(|true|,
    eps_floor); the floor keeps near-zero targets from demanding absolute
    exactness.  mse is computed in normalized target units.  target_index
    restricts the accuracy count to one output component.
    """
    x, y = _as_xy(test_set)
    pred = predict(model, x)
    ok = np.abs(pred - y) <= band * np.maximum(np.abs(y), eps_floor)
    if target_index is None:
        accuracy = float(np.mean(ok))
    else:
        accuracy = float(np.mean(ok[:, target_index]))
    yn = (y - model.target_mean) / model.target_scale
    pn = (pred - model.target_mean) / model.target_scale
    mse = float(np.mean((pn - yn) ** 2))
    return accuracy, mse


def gradient_check(layer_sizes, seed: int = 0, batch: int = 5, l1: float = 0.0,
                   eps: float = 1e-6) -> float:
    """norm-relative error between backprop and central finite differences."""
    model = init_model(layer_sizes, seed=seed)
    rng = np.random.default_rng(int(seed) + 1)
    xn = rng.normal(size=(batch, layer_sizes[0]))
    yn = rng.normal(size=(batch, layer_sizes[-1]))
    _, gw, gb = loss_and_gradients(model, xn, yn, l1)
    analytic = np.concatenate([g.ravel() for g in gw + gb])

    params = model.weights + model.biases
    numeric = np.zeros_like(analytic)
    at = 0
    for p in params:
        flat = p.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            lp, _, _ = loss_and_gradients(model, xn, yn, l1)
            flat[i] = keep - eps
            lm, _, _ = loss_and_gradients(model, xn, yn, l1)
            flat[i] = keep
            numeric[at] = (lp - lm) / (2 * eps)
            at += 1
    denom = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / denom


def tune_parameters(g, init, step: float = 0.05, iterations: int = 50,
                    k_max: float = float("inf"), fd_eps: float = 1e-4):
    """finite-difference gradient ascent on g(p, q, s) under g <= k_max.

    g is any callable of three scalars (typically a model surrogate built
    with key_length_surrogate).  an infeasible start is first pushed down
    the gradient until feasible; each ascent step is halved until the new
    point stays within the cap.  returns (params, trace) where trace lists
    (p, q, s, g) per accepted iterate.
    """
    params = np.asarray(init, dtype=float)
    if params.shape != (3,):
        raise ValueError("init must supply the three tunable parameters")
    if step <= 0 or iterations < 1:
        raise ValueError("step must be positive and iterations at least 1")
    if not np.isfinite(g(*params)):
        raise ValueError("surrogate is non-finite at the start point")

    def grad(at):
        out = np.zeros(3)
        for i in range(3):
            up = at.copy()
            dn = at.copy()
            up[i] += fd_eps
            dn[i] -= fd_eps
            out[i] = (g(*up) - g(*dn)) / (2 * fd_eps)
        return out

    # feasibility projection: walk downhill until the cap is satisfied
    guard = 0
    while g(*params) > k_max and guard < 10_000:
        params = params - step * grad(params)
        guard += 1
    if g(*params) > k_max:
        raise ValueError("could not reach the feasible region from the start point")

    trace = []
    for _ in range(iterations):
        move = step * grad(params)
        cand = params + move
        halvings = 0
        while g(*cand) > k_max and halvings < 60:
            move = move / 2.0
            cand = params + move
            halvings += 1
        if g(*cand) > k_max:
            cand = params  # pinned against the cap
        params = cand
        value = float(g(*params))
        if not np.isfinite(value):
            raise ValueError("surrogate became non-finite during ascent")
        trace.append((float(params[0]), float(params[1]), float(params[2]), value))
    return params, trace


def key_length_surrogate(model: AutoencoderModel):
    """predicted key-length fraction as a callable of the three features."""

    def g(p, q, s):
        return predict_session(model, np.array([p, q, s]))[1]

    return g


def save_model(model: AutoencoderModel, path: str) -> None:
    """self-describing JSON; floats round-trip exactly."""
    obj = {
        "schema": "bottleneck-regressor.v1",
        "layer_sizes": model.layer_sizes,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "feature_mean": model.feature_mean.tolist(),
        "feature_scale": model.feature_scale.tolist(),
        "target_mean": model.target_mean.tolist(),
        "target_scale": model.target_scale.tolist(),
        "loss_trace": model.loss_trace,
    }
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def load_model(path: str) -> AutoencoderModel:
    with open(path, encoding="ascii") as fh:
        obj = json.load(fh)
    if obj.get("schema") != "bottleneck-regressor.v1":
        raise ValueError("not a model file (missing schema marker)")
    return AutoencoderModel(
        layer_sizes=[int(s) for s in obj["layer_sizes"]],
        weights=[np.asarray(w, dtype=float) for w in obj["weights"]],
        biases=[np.asarray(b, dtype=float) for b in obj["biases"]],
        feature_mean=np.asarray(obj["feature_mean"], dtype=float),
        feature_scale=np.asarray(obj["feature_scale"], dtype=float),
        target_mean=np.asarray(obj["target_mean"], dtype=float),
        target_scale=np.asarray(obj["target_scale"], dtype=float),
        loss_trace=[(int(e), float(l)) for e, l in obj["loss_trace"]],
    )
