"""Dense Q-network with hand-written backprop and a per-parameter adaptive update.

The shipped architecture is 6-128-128-2: six inputs (five state features
plus a constant bias input), two ReLU hidden layers, and one linear output
per action. Everything is float64 numpy; there is no autodiff anywhere.
The loss is the mean squared TD error over a batch, where only the output
of the action actually taken contributes for each sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import mix64

LAYER_DIMS = (6, 128, 128, 2)
RMS_DECAY = 0.95
RMS_EPS = 1e-8


@dataclass
class QNetwork:
    """Weights, biases, and squared-gradient accumulators, one set per layer.

    Weight matrices are (fan_out, fan_in). The accumulators belong to the
    optimizer, start at zero, and are not persisted by the weights format.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    acc_weights: list[np.ndarray]
    acc_biases: list[np.ndarray]


@dataclass(frozen=True)
class TrainingBatch:
    inputs: np.ndarray  # (B, in_dim)
    actions: np.ndarray  # (B,) int, output index per sample
    targets: np.ndarray  # (B,) float


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_network(seed: int, layer_dims: tuple[int, ...] = LAYER_DIMS) -> QNetwork:
    """He-style initialization: N(0, sqrt(2/fan_in)) weights, zero biases."""
    if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
        raise ValueError("layer_dims must list at least two positive sizes")
    rng = np.random.default_rng(seed)
    weights, biases, acc_w, acc_b = [], [], [], []
    for fan_in, fan_out in zip(layer_dims, layer_dims[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
        acc_w.append(np.zeros((fan_out, fan_in)))
        acc_b.append(np.zeros(fan_out))
    return QNetwork(tuple(layer_dims), weights, biases, acc_w, acc_b)


def forward(net: QNetwork, features: np.ndarray) -> np.ndarray:
    """Action values for one input vector; rejects non-finite input."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (net.layer_dims[0],):
        raise ValueError(f"expected input of shape ({net.layer_dims[0]},)")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input rejected")
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b
        a = z if i == last else np.maximum(z, 0.0)
    return a


def forward_batch(net: QNetwork, inputs: np.ndarray) -> np.ndarray:
    """Action values for a (B, in_dim) batch, one row per sample."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layer_dims[0]:
        raise ValueError(f"expected inputs of shape (B, {net.layer_dims[0]})")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input rejected")
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = z if i == last else np.maximum(z, 0.0)
    return a


def batch_loss(net: QNetwork, batch: TrainingBatch) -> float:
    """Mean squared TD error of the selected outputs (forward pass only)."""
    q = forward_batch(net, batch.inputs)
    picked = q[np.arange(q.shape[0]), np.asarray(batch.actions, dtype=np.intp)]
    err = picked - np.asarray(batch.targets, dtype=np.float64)
    return float(np.mean(err * err))


def td_gradients(net: QNetwork, batch: TrainingBatch) -> tuple[Gradients, float]:
    """Analytic gradients of the batch loss with respect to every parameter.

    Backprop is written out by hand: the output-layer error is
    2 * (q_selected - target) / B routed only through each sample's selected
    action, and the ReLU derivative is taken as 0 at exactly 0.
    """
    x = np.asarray(batch.inputs, dtype=np.float64)
    actions = np.asarray(batch.actions, dtype=np.intp)
    targets = np.asarray(batch.targets, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("batch must contain at least one sample")
    if actions.shape != (x.shape[0],) or targets.shape != (x.shape[0],):
        raise ValueError("actions and targets must have one entry per sample")
    if not (np.isfinite(x).all() and np.isfinite(targets).all()):
        raise ValueError("non-finite batch rejected")
    if actions.min() < 0 or actions.max() >= net.layer_dims[-1]:
        raise ValueError("action index out of range")

    # forward, keeping pre-activations for the backward pass
    pre: list[np.ndarray] = []
    acts: list[np.ndarray] = [x]
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)

    batch_size = x.shape[0]
    q = acts[-1]
    rows = np.arange(batch_size)
    err = q[rows, actions] - targets
    loss = float(np.mean(err * err))

    delta = np.zeros_like(q)
    delta[rows, actions] = 2.0 * err / batch_size

    grad_w = [np.empty(0)] * len(net.weights)
    grad_b = [np.empty(0)] * len(net.biases)
    for i in range(last, -1, -1):
        grad_w[i] = delta.T @ acts[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (pre[i - 1] > 0.0)
    return Gradients(grad_w, grad_b), loss


def apply_update(net: QNetwork, gradients: Gradients, base_rate: float) -> QNetwork:
    """One adaptive step per parameter, in place; returns the same network.

    Each accumulator decays toward the squared gradient
    (acc <- 0.95 acc + 0.05 g^2) and the parameter moves by
    -base_rate * g / (sqrt(acc) + 1e-8). Non-finite gradients are rejected.
    """
    if not base_rate > 0:
        raise ValueError("base_rate must be positive")
    pairs = list(zip(net.weights, net.acc_weights, gradients.weights)) + list(
        zip(net.biases, net.acc_biases, gradients.biases)
    )
    for param, _, grad in pairs:
        if grad.shape != param.shape:
            raise ValueError("gradient shape mismatch")
        if not np.isfinite(grad).all():
            raise ValueError("non-finite gradients rejected")
    for param, acc, grad in pairs:
        acc *= RMS_DECAY
        acc += (1.0 - RMS_DECAY) * grad * grad
        param -= base_rate * grad / (np.sqrt(acc) + RMS_EPS)
    return net


def finite_difference_error(
    net: QNetwork,
    batch: TrainingBatch,
    gradients: Gradients,
    samples: int = 1000,
    perturbation: float = 1e-5,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative disagreement between ``gradients`` and central differences.

    Coordinates are sampled without replacement across all parameter
    tensors. Relative error uses a 1e-6 denominator floor so that
    near-zero gradients compare on an absolute scale.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    tensors = list(zip(net.weights, gradients.weights)) + list(
        zip(net.biases, gradients.biases)
    )
    sizes = [p.size for p, _ in tensors]
    total = sum(sizes)
    picked = rng.choice(total, size=min(samples, total), replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for flat in picked:
        t = int(np.searchsorted(offsets, flat, side="right") - 1)
        j = int(flat - offsets[t])
        param_view = tensors[t][0].reshape(-1)
        analytic = tensors[t][1].reshape(-1)[j]
        original = param_view[j]
        param_view[j] = original + perturbation
        loss_plus = batch_loss(net, batch)
        param_view[j] = original - perturbation
        loss_minus = batch_loss(net, batch)
        param_view[j] = original
        estimate = (loss_plus - loss_minus) / (2.0 * perturbation)
        err = abs(analytic - estimate) / max(abs(analytic), abs(estimate), 1e-6)
        worst = max(worst, err)
    return worst


def gradient_check(seed: int, samples: int = 1000) -> float:
    """Compare analytic gradients against central differences on a random net.

    Builds a seeded random network and batch, computes td_gradients, and
    returns the max relative error over ``samples`` sampled parameters.
    Identical seeds give identical results.
    """
    net = init_network(seed)
    rng = np.random.default_rng(mix64(seed, 97))
    batch_size = 8
    batch = TrainingBatch(
        inputs=rng.random((batch_size, net.layer_dims[0])),
        actions=rng.integers(0, net.layer_dims[-1], size=batch_size),
        targets=rng.normal(0.0, 2.0, size=batch_size),
    )
    gradients, _ = td_gradients(net, batch)
    return finite_difference_error(net, batch, gradients, samples, 1e-5, rng)


def _format_row(values: np.ndarray) -> str:
    return " ".join(repr(v) for v in values.tolist())


def save_weights(net: QNetwork, sink) -> None:
    """Write weights and biases to the line-oriented text format.

    Header ``layers <dims...>``, then per layer a ``W <rows> <cols>`` block
    with one space-separated row per line and a ``b <rows>`` block with a
    single line. Decimals carry full round-trip precision; optimizer state
    is deliberately not persisted.
    """
    lines = ["layers " + " ".join(str(d) for d in net.layer_dims)]
    for w, b in zip(net.weights, net.biases):
        lines.append(f"W {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(_format_row(row))
        lines.append(f"b {b.shape[0]}")
        lines.append(_format_row(b))
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        Path(sink).write_text(text)


def load_weights(source, expected_dims: tuple[int, ...] | None = LAYER_DIMS) -> QNetwork:
    """Parse the format written by :func:`save_weights`.

    The loader is strict: a wrong architecture (when ``expected_dims`` is
    given), a truncated file, a malformed count, or trailing content all
    raise ValueError and never return a partial network. Accumulators come
    back as zeros.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    lines = text.splitlines()
    pos = 0

    def next_line(what: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"truncated weights file: expected {what}")
        line = lines[pos]
        pos += 1
        return line

    header = next_line("'layers' header").split()
    if not header or header[0] != "layers":
        raise ValueError("weights file must start with a 'layers' header")
    try:
        dims = tuple(int(tok) for tok in header[1:])
    except ValueError as exc:
        raise ValueError("malformed 'layers' header") from exc
    if len(dims) < 2:
        raise ValueError("'layers' header must list at least two sizes")
    if expected_dims is not None and dims != tuple(expected_dims):
        raise ValueError(
            f"architecture mismatch: file has layers {dims}, expected {tuple(expected_dims)}"
        )

    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        head = next_line("a 'W <rows> <cols>' line").split()
        if head != ["W", str(fan_out), str(fan_in)]:
            raise ValueError(f"expected 'W {fan_out} {fan_in}', got {' '.join(head)!r}")
        rows = []
        for _ in range(fan_out):
            values = next_line("a weight row").split()
            if len(values) != fan_in:
                raise ValueError(f"weight row must contain {fan_in} values")
            rows.append([float(v) for v in values])
        weights.append(np.array(rows, dtype=np.float64))
        head = next_line("a 'b <rows>' line").split()
        if head != ["b", str(fan_out)]:
            raise ValueError(f"expected 'b {fan_out}', got {' '.join(head)!r}")
        values = next_line("a bias row").split()
        if len(values) != fan_out:
            raise ValueError(f"bias row must contain {fan_out} values")
        biases.append(np.array([float(v) for v in values], dtype=np.float64))
    if any(line.strip() for line in lines[pos:]):
        raise ValueError("unexpected trailing content in weights file")
    return QNetwork(
        dims,
        weights,
        biases,
        [np.zeros_like(w) for w in weights],
        [np.zeros_like(b) for b in biases],
    )
