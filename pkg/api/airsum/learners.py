"""
Desk-scale learners on flat parameter vectors.

Each learner exposes n_params, init_params, loss_and_grad, predict and
accuracy; the parameter vector w is what devices transmit, one entry per
subchannel.
"""
import logging
from typing import Tuple

import numpy as np

from .schemas import LearnerSpec

logger = logging.getLogger(__name__)


def _one_hot(y: np.ndarray, classes: int) -> np.ndarray:
    out = np.zeros((y.shape[0], classes))
    out[np.arange(y.shape[0]), y.astype(np.int64)] = 1.0
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    picked = probs[np.arange(y.shape[0]), y.astype(np.int64)]
    return float(-np.mean(np.log(np.clip(picked, 1e-300, None))))


class Learner:
    """Base class; subclasses fill in the parameter layout and the math."""

    def __init__(self, spec: LearnerSpec):
        self.spec = spec

    @property
    def n_params(self) -> int:
        raise NotImplementedError

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.n_params)

    def loss_and_grad(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
        raise NotImplementedError

    def loss(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
        return self.loss_and_grad(w, x, y)[0]

    def predict(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def accuracy(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
        if x.shape[0] == 0:
            return 0.0
        return float(np.mean(self.predict(w, x) == y))

    def _check(self, w: np.ndarray, x: np.ndarray) -> None:
        if w.shape != (self.n_params,):
            raise ValueError(f"Expected {self.n_params} parameters, got shape {w.shape}")
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise ValueError(f"Expected inputs with {self.spec.input_dim} features, got shape {x.shape}")


class _AffineLearner(Learner):
    """Shared layout for models with a single affine map: W (d x c) then b (c)."""

    @property
    def n_params(self) -> int:
        return (self.spec.input_dim + 1) * self.spec.class_count

    def _unpack(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d, c = self.spec.input_dim, self.spec.class_count
        return w[: d * c].reshape(d, c), w[d * c:]

    def _outputs(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        weights, bias = self._unpack(w)
        return x @ weights + bias

    def _pack(self, grad_weights: np.ndarray, grad_bias: np.ndarray) -> np.ndarray:
        return np.concatenate([grad_weights.ravel(), grad_bias])

    def predict(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        self._check(w, x)
        return np.argmax(self._outputs(w, x), axis=1)


class LinearRegression(_AffineLearner):
    """Least-squares fit of one-hot targets: loss = mean_j 0.5 ||W^T x_j + b - e_{y_j}||^2."""

    def loss_and_grad(self, w, x, y):
        self._check(w, x)
        n = x.shape[0]
        residual = self._outputs(w, x) - _one_hot(y, self.spec.class_count)
        loss = 0.5 * float(np.sum(residual ** 2)) / n
        return loss, self._pack(x.T @ residual / n, residual.mean(axis=0))


class SoftmaxRegression(_AffineLearner):
    def loss_and_grad(self, w, x, y):
        self._check(w, x)
        n = x.shape[0]
        probs = _softmax(self._outputs(w, x))
        delta = (probs - _one_hot(y, self.spec.class_count)) / n
        return _cross_entropy(probs, y), self._pack(x.T @ delta, delta.sum(axis=0))


class OneHiddenLayerMLP(Learner):
    """tanh hidden layer followed by a softmax output layer."""

    @property
    def n_params(self) -> int:
        d, h, c = self.spec.input_dim, self.spec.hidden_units, self.spec.class_count
        return d * h + h + h * c + c

    def _unpack(self, w):
        d, h, c = self.spec.input_dim, self.spec.hidden_units, self.spec.class_count
        i = 0
        w1 = w[i:i + d * h].reshape(d, h)
        i += d * h
        b1 = w[i:i + h]
        i += h
        w2 = w[i:i + h * c].reshape(h, c)
        i += h * c
        b2 = w[i:i + c]
        return w1, b1, w2, b2

    def init_params(self, rng):
        d, h = self.spec.input_dim, self.spec.hidden_units
        w = np.zeros(self.n_params)
        w[: d * h] = rng.normal(0.0, 1.0 / np.sqrt(d), size=d * h)
        w[d * h + h: d * h + h + h * self.spec.class_count] = rng.normal(
            0.0, 1.0 / np.sqrt(h), size=h * self.spec.class_count
        )
        return w

    def _forward(self, w, x):
        w1, b1, w2, b2 = self._unpack(w)
        hidden = np.tanh(x @ w1 + b1)
        return hidden, _softmax(hidden @ w2 + b2)

    def loss_and_grad(self, w, x, y):
        self._check(w, x)
        n = x.shape[0]
        _, _, w2, _ = self._unpack(w)
        hidden, probs = self._forward(w, x)
        delta_out = (probs - _one_hot(y, self.spec.class_count)) / n
        delta_hidden = (delta_out @ w2.T) * (1.0 - hidden ** 2)
        grad = np.concatenate([
            (x.T @ delta_hidden).ravel(),
            delta_hidden.sum(axis=0),
            (hidden.T @ delta_out).ravel(),
            delta_out.sum(axis=0),
        ])
        return _cross_entropy(probs, y), grad

    def predict(self, w, x):
        self._check(w, x)
        return np.argmax(self._forward(w, x)[1], axis=1)


class Quadratic(Learner):
    """
    loss = mean_j 0.5 ||w - x_j||^2, smoothness 1, minimizer the sample mean.
    Labels are ignored; accuracy is reported as 0.
    """

    @property
    def n_params(self) -> int:
        return self.spec.input_dim

    def loss_and_grad(self, w, x, y):
        self._check(w, x)
        diff = w[None, :] - x
        return 0.5 * float(np.mean(np.sum(diff ** 2, axis=1))), diff.mean(axis=0)

    def predict(self, w, x):
        self._check(w, x)
        return np.full(x.shape[0], -1)

    def accuracy(self, w, x, y):
        return 0.0


LEARNER_FAMILIES = {
    "linear-regression": LinearRegression,
    "softmax-regression": SoftmaxRegression,
    "one-hidden-layer-mlp": OneHiddenLayerMLP,
    "quadratic": Quadratic,
}


def build_learner(spec: LearnerSpec) -> Learner:
    try:
        return LEARNER_FAMILIES[spec.family](spec)
    except KeyError:
        raise ValueError(f"Unknown learner family {spec.family}")
