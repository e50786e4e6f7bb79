"""Local models, one-client mini-batch SGD, and evaluation.

Two desk-scale architectures: multinomial logistic regression
(``softmax_linear``) and a one-hidden-layer tanh MLP (``mlp_one_hidden``).
Parameters live in a single flat float64 vector with a layout table, so
chaining, averaging and checkpointing never have to understand layer shapes.

Training is plain SGD on softmax cross-entropy: per epoch, a seeded
permutation of the client's samples is cut into batches of ``batch_size``;
the final short batch is kept and its gradient averaged over its own size.
All math is float64 and the functions are pure, which is what makes a
sequential chain of clients bit-reproducible and equal to centralized SGD
over the concatenated data under a matched batch schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TrainingDivergedError
from .rng import generator

KIND_SOFTMAX_LINEAR = "softmax_linear"
KIND_MLP_ONE_HIDDEN = "mlp_one_hidden"


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    feature_dim: int
    num_classes: int
    hidden_units: int | None = None
    init_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (KIND_SOFTMAX_LINEAR, KIND_MLP_ONE_HIDDEN):
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.feature_dim < 1 or self.num_classes < 2:
            raise ConfigurationError("model dimensions are inconsistent")
        if self.kind == KIND_MLP_ONE_HIDDEN:
            if self.hidden_units is None or self.hidden_units < 1:
                raise ConfigurationError(
                    f"mlp_one_hidden needs positive hidden_units, got {self.hidden_units}"
                )


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    batch_size: int = 5
    local_epochs: int = 1

    def __post_init__(self) -> None:
        if self.learning_rate < 0.0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.local_epochs < 1:
            raise ConfigurationError(f"local_epochs must be >= 1, got {self.local_epochs}")


@dataclass(frozen=True)
class ModelParams:
    """Flat float64 parameter vector plus its layer layout.

    ``layout`` is a tuple of ``(name, shape)`` pairs in storage order; the
    names identify the architecture (``w, b`` for the linear model,
    ``w1, b1, w2, b2`` for the MLP).
    """

    values: np.ndarray
    layout: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self, "layout", tuple((name, tuple(shape)) for name, shape in self.layout)
        )
        expected = sum(int(np.prod(shape)) for _, shape in self.layout)
        if values.ndim != 1 or values.size != expected:
            raise ValueError(f"expected {expected} parameters, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("parameters must be finite")

    def view(self, name: str) -> np.ndarray:
        offset = 0
        for layer, shape in self.layout:
            size = int(np.prod(shape))
            if layer == name:
                return self.values[offset : offset + size].reshape(shape)
            offset += size
        raise KeyError(name)

    def copy(self) -> "ModelParams":
        return ModelParams(values=self.values.copy(), layout=self.layout)


def _layout(spec: ModelSpec) -> tuple[tuple[str, tuple[int, ...]], ...]:
    if spec.kind == KIND_SOFTMAX_LINEAR:
        return (
            ("w", (spec.num_classes, spec.feature_dim)),
            ("b", (spec.num_classes,)),
        )
    return (
        ("w1", (spec.hidden_units, spec.feature_dim)),
        ("b1", (spec.hidden_units,)),
        ("w2", (spec.num_classes, spec.hidden_units)),
        ("b2", (spec.num_classes,)),
    )


def init_model(spec: ModelSpec) -> ModelParams:
    """Seeded init: weights uniform in [-s, s] with s = 1/sqrt(fan_in), biases zero."""
    rng = generator(spec.init_seed, "model-init")
    layout = _layout(spec)
    chunks = []
    for name, shape in layout:
        if name.startswith("w"):
            bound = 1.0 / math.sqrt(shape[1])
            chunks.append(rng.uniform(-bound, bound, size=shape).ravel())
        else:
            chunks.append(np.zeros(shape))
    return ModelParams(values=np.concatenate(chunks), layout=layout)


def _split(values: np.ndarray, layout) -> dict[str, np.ndarray]:
    views = {}
    offset = 0
    for name, shape in layout:
        size = int(np.prod(shape))
        views[name] = values[offset : offset + size].reshape(shape)
        offset += size
    return views


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def _forward(values: np.ndarray, layout, features: np.ndarray):
    """Return (logits, hidden activation or None)."""
    layers = _split(values, layout)
    if "w1" in layers:
        hidden = np.tanh(features @ layers["w1"].T + layers["b1"])
        return hidden @ layers["w2"].T + layers["b2"], hidden
    return features @ layers["w"].T + layers["b"], None


def loss_and_gradient(
    params: ModelParams, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its analytic gradient (flat)."""
    layers = _split(params.values, params.layout)
    batch = len(labels)
    logits, hidden = _forward(params.values, params.layout, features)
    log_probs = _log_softmax(logits)
    loss = -float(log_probs[np.arange(batch), labels].mean())

    delta = np.exp(log_probs)
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    if hidden is None:
        grads = {"w": delta.T @ features, "b": delta.sum(axis=0)}
    else:
        upstream = (delta @ layers["w2"]) * (1.0 - hidden * hidden)
        grads = {
            "w1": upstream.T @ features,
            "b1": upstream.sum(axis=0),
            "w2": delta.T @ hidden,
            "b2": delta.sum(axis=0),
        }
    flat = np.concatenate([grads[name].ravel() for name, _ in params.layout])
    return loss, flat


def train_one_client(
    params: ModelParams, dataset, config: SgdConfig, batch_seed: int
) -> ModelParams:
    """Run ``local_epochs`` of mini-batch SGD on one client's data.

    The batch order of epoch ``e`` is the seeded permutation
    ``generator(batch_seed, "batch-order", e)``; the input parameters and the
    dataset are never mutated.

    Raises:
        TrainingDivergedError: On a non-finite loss or gradient.
    """
    values = params.values.copy()
    working = ModelParams(values=values, layout=params.layout)
    features, labels = dataset.features, dataset.labels
    n = len(labels)
    if n == 0:
        raise ValueError("dataset is empty")
    for epoch in range(config.local_epochs):
        order = generator(batch_seed, "batch-order", epoch).permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad = loss_and_gradient(working, features[idx], labels[idx])
            if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(
                    f"non-finite loss/gradient at epoch {epoch}, "
                    f"batch {start // config.batch_size} (learning-rate blowup?)"
                )
            values -= config.learning_rate * grad
    return ModelParams(values=values, layout=params.layout)


def evaluate(params: ModelParams, dataset) -> tuple[float, float]:
    """Accuracy (argmax-match fraction) and mean cross-entropy on a dataset."""
    logits, _ = _forward(params.values, params.layout, dataset.features)
    log_probs = _log_softmax(logits)
    predictions = np.argmax(logits, axis=1)
    accuracy = float(np.mean(predictions == dataset.labels))
    loss = -float(log_probs[np.arange(len(dataset.labels)), dataset.labels].mean())
    return accuracy, loss
