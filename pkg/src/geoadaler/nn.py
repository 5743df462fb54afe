"""Fully connected classifier with manual backpropagation.

Hidden layers are affine + ReLU, the output layer is affine only, and the
loss is mean softmax cross-entropy.  Parameters live in one flat float64
buffer that the layer matrices view into, so optimizers that work on a
single parameter vector apply directly and flatten/unflatten is exact by
construction.
"""

import time

import numpy as np
from dataclasses import dataclass, field

from .errors import ContractError
from .optimizers import default_hyperparams, make_optimizer
from .rng import SplitMix64


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ContractError("need at least [in, out] layer sizes")
        if any(s < 1 for s in sizes):
            raise ContractError(f"layer sizes must be positive, got {sizes}")

    @property
    def n_classes(self):
        return self.layer_sizes[-1]

    @property
    def n_params(self):
        return sum(o * i + o for i, o in zip(self.layer_sizes, self.layer_sizes[1:]))


class MlpParams:
    """Weights (out x in) and biases per layer, viewing one flat buffer."""

    def __init__(self, spec, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise ContractError(f"flat buffer has {flat.size} entries, spec needs {spec.n_params}")
        self.spec = spec
        self.flat = flat
        self.weights = []
        self.biases = []
        offset = 0
        for fan_in, fan_out in zip(spec.layer_sizes, spec.layer_sizes[1:]):
            self.weights.append(flat[offset:offset + fan_out * fan_in].reshape(fan_out, fan_in))
            offset += fan_out * fan_in
            self.biases.append(flat[offset:offset + fan_out])
            offset += fan_out

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros(spec.n_params))

    @classmethod
    def init_he(cls, spec, rng):
        """Zero-mean normals scaled by sqrt(2 / fan_in); zero biases."""
        params = cls.zeros(spec)
        for w in params.weights:
            fan_in = w.shape[1]
            w[...] = rng.normal_array(w.shape) * np.sqrt(2.0 / fan_in)
        return params

    def copy(self):
        return MlpParams(self.spec, self.flat.copy())


def forward(params, inputs):
    """Logits and the activation cache needed for the backward pass."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.spec.layer_sizes[0]:
        raise ContractError(
            f"inputs must be (batch, {params.spec.layer_sizes[0]}), got {x.shape}")
    activations = [x]
    pre_acts = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ w.T + b
        pre_acts.append(z)
        last = i == len(params.weights) - 1
        activations.append(z if last else np.maximum(z, 0.0))
    return pre_acts[-1], (activations, pre_acts)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and the logit gradient; row max subtracted first."""
    labels = np.asarray(labels)
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1))
    loss = float(np.mean(log_z - shifted[np.arange(n), labels]))
    probs = np.exp(shifted - log_z[:, None])
    probs[np.arange(n), labels] -= 1.0
    return loss, probs / n


def loss_and_grad(params, inputs, labels):
    """Mean softmax cross-entropy and its gradient in flat layout."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size != np.asarray(inputs).shape[0]:
        raise ContractError("labels must be one class index per input row")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= params.spec.n_classes:
        raise ContractError(f"labels must lie in [0, {params.spec.n_classes})")
    logits, (activations, pre_acts) = forward(params, inputs)
    loss, delta = softmax_cross_entropy(logits, labels)
    grad = MlpParams.zeros(params.spec)
    for i in reversed(range(len(params.weights))):
        grad.weights[i][...] = delta.T @ activations[i]
        grad.biases[i][...] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (pre_acts[i - 1] > 0.0)
    return loss, grad.flat


def evaluate(params, inputs, labels, chunk=2048):
    """Argmax accuracy; ties resolve to the lowest class index."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ContractError("cannot evaluate on an empty dataset")
    hits = 0
    for start in range(0, labels.size, chunk):
        logits, _ = forward(params, inputs[start:start + chunk])
        hits += int(np.sum(np.argmax(logits, axis=1) == labels[start:start + chunk]))
    return hits / labels.size


@dataclass
class RunResult:
    optimizer: str
    seed: int
    epsilon: float
    train_loss: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)
    wall_seconds: list = field(default_factory=list)

    @property
    def final_accuracy(self):
        return self.test_accuracy[-1]

    def rows(self):
        return [
            [e + 1, self.train_loss[e], self.test_accuracy[e], self.wall_seconds[e]]
            for e in range(len(self.train_loss))
        ]


RUN_CSV_HEADER = ["epoch", "train_loss", "test_accuracy", "wall_seconds"]


def train(spec, optimizer_name, train_inputs, train_labels, test_inputs, test_labels,
          epochs, batch_size, seed, h=None, params=None):
    """Mini-batch training with per-epoch reshuffling from the seeded stream.

    One optimizer step per batch on the flattened gradient; records the
    epoch-mean train loss and end-of-epoch test accuracy.  Identical
    arguments reproduce the loss curve bit for bit.
    """
    train_inputs = np.asarray(train_inputs, dtype=np.float64)
    train_labels = np.asarray(train_labels)
    n = train_labels.size
    if n == 0:
        raise ContractError("training set is empty")
    if epochs < 1:
        raise ContractError(f"epochs must be >= 1, got {epochs}")
    if batch_size < 1:
        raise ContractError(f"batch size must be >= 1, got {batch_size}")

    rng = SplitMix64(seed)
    init_rng = rng.split()
    shuffle_rng = rng.split()
    if params is None:
        params = MlpParams.init_he(spec, init_rng)
    if h is None:
        h = default_hyperparams(optimizer_name)
    opt = make_optimizer(optimizer_name, spec.n_params, h)

    result = RunResult(optimizer=opt.name, seed=seed, epsilon=h.epsilon)
    for _ in range(epochs):
        started = time.perf_counter()
        order = shuffle_rng.permutation(n)
        batch_losses = []
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            loss, grad = loss_and_grad(params, train_inputs[idx], train_labels[idx])
            batch_losses.append(loss)
            params.flat += opt.step(grad)
        result.train_loss.append(float(np.mean(batch_losses)))
        result.test_accuracy.append(evaluate(params, test_inputs, test_labels))
        result.wall_seconds.append(time.perf_counter() - started)
    return result, params
