"""Single-hidden-layer sigmoid network, written out by hand.

Every unit computes ``f(x . w + b)`` with ``f`` the logistic sigmoid, on the
hidden layer and on the two outputs. The outputs are read as a pair
``(a, b)``: ``a`` is the strength of the sell recommendation and ``b`` the
strength of the buy recommendation.

Training is plain full-batch gradient descent on the quadratic loss
``0.5 * ||output - onehot(label)||**2``. The update loop runs over a stack
of independent networks at once (``train_many``) so that a whole ticker
universe can be fitted in one pass; ``train`` is the same loop with a stack
of one, so both give bit-identical parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import LabeledExample, feature_matrix
from .errors import ConfigInvalid, DimensionMismatch, EmptyTrainSet, ZeroDimension

DEFAULT_SHAPE = (10, 20, 2)
SELL, BUY = 0, 1


# exp(-z) overflows for z below about -709. Flooring z at -500 keeps the
# result finite and nonzero; large positive z already gives exp(-z) = 0.
_Z_FLOOR = -500.0


def sigmoid(z):
    """Logistic function ``1 / (1 + exp(-z))`` without overflow for very negative ``z``."""
    out = np.maximum(np.asarray(z, dtype=float), _Z_FLOOR)
    if out.ndim == 0:
        return 1.0 / (1.0 + math.exp(-float(out)))
    np.negative(out, out=out)
    np.exp(out, out=out)
    out += 1.0
    return np.reciprocal(out, out=out)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class NetworkParams:
    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)
    seed: int | None = None

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.w1.ndim != 2 or self.w2.ndim != 2 or self.b1.ndim != 1 or self.b2.ndim != 1:
            raise DimensionMismatch("weights must be matrices and biases vectors")
        hidden, _ = self.w1.shape
        output, hidden2 = self.w2.shape
        if self.b1.shape != (hidden,) or hidden2 != hidden or self.b2.shape != (output,):
            raise DimensionMismatch(
                f"inconsistent shapes w1{self.w1.shape} b1{self.b1.shape} "
                f"w2{self.w2.shape} b2{self.b2.shape}"
            )
        if not all(np.isfinite(a).all() for a in self.arrays()):
            raise ValueError("network parameters must be finite")

    @property
    def shape(self) -> tuple[int, int, int]:
        hidden, inputs = self.w1.shape
        return inputs, hidden, self.w2.shape[0]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.w1, self.b1, self.w2, self.b2

    def as_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_vector(cls, vec, shape: tuple[int, int, int], seed: int | None = None) -> "NetworkParams":
        inputs, hidden, output = shape
        sizes = [hidden * inputs, hidden, output * hidden, output]
        parts = np.split(np.asarray(vec, dtype=float), np.cumsum(sizes)[:-1])
        return cls(
            parts[0].reshape(hidden, inputs),
            parts[1],
            parts[2].reshape(output, hidden),
            parts[3],
            seed,
        )

    def identical_to(self, other: "NetworkParams") -> bool:
        """Bitwise equality of every weight and bias."""
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )

    def to_json_dict(self) -> dict:
        return {
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
            "shape": list(self.shape),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NetworkParams":
        params = cls(doc["w1"], doc["b1"], doc["w2"], doc["b2"], doc.get("seed"))
        if "shape" in doc and tuple(doc["shape"]) != params.shape:
            raise DimensionMismatch(f"declared shape {doc['shape']} != actual {list(params.shape)}")
        return params


# Gradients share the parameter layout exactly.
Gradients = NetworkParams


def dump_params(params: NetworkParams, path: "str | Path") -> None:
    Path(path).write_text(json.dumps(params.to_json_dict()), encoding="utf-8")


def load_params(path: "str | Path") -> NetworkParams:
    return NetworkParams.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Recommendation:
    a: float  # sell strength
    b: float  # buy strength

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0 and 0.0 <= self.b <= 1.0):
            raise ValueError(f"recommendation components must lie in [0, 1], got ({self.a}, {self.b})")


@dataclass(frozen=True)
class ForwardCache:
    x: np.ndarray
    hidden: np.ndarray
    output: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 1000
    seed: int = 0
    loss: str = "quadratic"
    update: str = "full_batch"

    def __post_init__(self):
        if not (isinstance(self.learning_rate, (int, float)) and math.isfinite(self.learning_rate)
                and self.learning_rate > 0):
            raise ConfigInvalid(f"learning_rate must be a positive real, got {self.learning_rate!r}")
        if isinstance(self.epochs, bool) or not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigInvalid(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigInvalid(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.loss != "quadratic":
            raise ConfigInvalid(f"unsupported loss {self.loss!r}")
        if self.update != "full_batch":
            raise ConfigInvalid(f"unsupported update rule {self.update!r}")


def init_network(shape: Sequence[int] = DEFAULT_SHAPE, seed: int = 0) -> NetworkParams:
    """Uniform weights in +-1/sqrt(fan_in), zero biases, fully determined by ``seed``."""
    inputs, hidden, output = (int(d) for d in shape)
    if min(inputs, hidden, output) < 1:
        raise ZeroDimension(f"every layer needs at least one unit, got {tuple(shape)}")
    rng = np.random.default_rng(seed)
    lim1, lim2 = 1.0 / math.sqrt(inputs), 1.0 / math.sqrt(hidden)
    w1 = rng.uniform(-lim1, lim1, size=(hidden, inputs))
    w2 = rng.uniform(-lim2, lim2, size=(output, hidden))
    return NetworkParams(w1, np.zeros(hidden), w2, np.zeros(output), seed)


def _input_vector(params: NetworkParams, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim != 1 or x.shape[0] != params.shape[0]:
        raise DimensionMismatch(f"expected {params.shape[0]} features, got shape {x.shape}")
    return x


def forward(params: NetworkParams, features) -> tuple[Recommendation, ForwardCache]:
    x = _input_vector(params, features)
    hidden = sigmoid(params.w1 @ x + params.b1)
    output = sigmoid(params.w2 @ hidden + params.b2)
    if output.shape != (2,):
        raise DimensionMismatch(f"a recommendation needs exactly 2 outputs, network has {output.shape[0]}")
    return Recommendation(float(output[0]), float(output[1])), ForwardCache(x, hidden, output)


def decide(rec: Recommendation) -> int:
    """Buy (1) unless the sell strength strictly exceeds the buy strength."""
    return SELL if rec.a > rec.b else BUY


def one_hot(label: int, n_outputs: int = 2) -> np.ndarray:
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    target = np.zeros(n_outputs)
    target[label] = 1.0
    return target


def loss(rec: Recommendation, label: int) -> float:
    target = one_hot(label)
    return 0.5 * ((rec.a - target[0]) ** 2 + (rec.b - target[1]) ** 2)


def backprop(params: NetworkParams, features, label: int) -> Gradients:
    """Exact gradient of the quadratic loss for one example."""
    _, cache = forward(params, features)
    target = one_hot(label, params.shape[2])
    d_out = (cache.output - target) * cache.output * (1.0 - cache.output)
    d_hidden = (params.w2.T @ d_out) * cache.hidden * (1.0 - cache.hidden)
    return Gradients(
        np.outer(d_hidden, cache.x),
        d_hidden,
        np.outer(d_out, cache.hidden),
        d_out,
    )


# -- stacked full-batch training ---------------------------------------------
#
# Shapes: x (T, n, I), targets (T, n, O), w1 (T, H, I), b1 (T, H),
# w2 (T, O, H), b2 (T, O). Each of the T slices is an independent network.

def _sigmoid_inplace(a: np.ndarray) -> np.ndarray:
    np.maximum(a, _Z_FLOOR, out=a)
    np.negative(a, out=a)
    np.exp(a, out=a)
    a += 1.0
    return np.reciprocal(a, out=a)


class _Workspace:
    """Scratch buffers for repeated mean-gradient evaluation on a fixed stack.

    Training spends nearly all its time here, so every intermediate lives in
    a preallocated array and is updated in place.
    """

    def __init__(self, x: np.ndarray, targets: np.ndarray, hidden_size: int):
        t, n, _ = x.shape
        outputs = targets.shape[2]
        self.x, self.targets, self.n = x, targets, n
        self.hidden = np.empty((t, n, hidden_size))
        self.hidden_slope = np.empty_like(self.hidden)
        self.d_hidden = np.empty_like(self.hidden)
        self.out = np.empty((t, n, outputs))
        self.err = np.empty_like(self.out)
        self.d_out = np.empty_like(self.out)

    def gradients(self, w1, b1, w2, b2, grads, loss_out=None):
        """Fill ``grads`` (g_w1, g_b1, g_w2, g_b2) with the mean gradient over each slice."""
        g1, gb1, g2, gb2 = grads
        hidden, out, err, d_out = self.hidden, self.out, self.err, self.d_out

        np.matmul(self.x, w1.transpose(0, 2, 1), out=hidden)
        hidden += b1[:, None, :]
        _sigmoid_inplace(hidden)
        np.matmul(hidden, w2.transpose(0, 2, 1), out=out)
        out += b2[:, None, :]
        _sigmoid_inplace(out)

        np.subtract(out, self.targets, out=err)
        if loss_out is not None:
            loss_out[:] = 0.5 * np.square(err).sum(axis=2).mean(axis=1)

        # output delta: err * f'(z) with f' = out * (1 - out)
        np.subtract(1.0, out, out=d_out)
        d_out *= out
        d_out *= err
        np.matmul(d_out, w2, out=self.d_hidden)
        np.subtract(1.0, hidden, out=self.hidden_slope)
        self.hidden_slope *= hidden
        self.d_hidden *= self.hidden_slope

        np.matmul(self.d_hidden.transpose(0, 2, 1), self.x, out=g1)
        self.d_hidden.sum(axis=1, out=gb1)
        np.matmul(d_out.transpose(0, 2, 1), hidden, out=g2)
        d_out.sum(axis=1, out=gb2)
        for g in grads:
            g /= self.n


def _stacked_gradients(x, targets, w1, b1, w2, b2):
    ws = _Workspace(x, targets, w1.shape[1])
    grads = tuple(np.empty_like(w) for w in (w1, b1, w2, b2))
    mean_loss = np.empty(x.shape[0])
    ws.gradients(w1, b1, w2, b2, grads, mean_loss)
    return mean_loss, grads


def _descend(x, targets, weights, learning_rate, epochs, losses=None):
    """Full-batch gradient descent on a stack; ``weights`` are updated in place."""
    ws = _Workspace(x, targets, weights[0].shape[1])
    grads = tuple(np.empty_like(w) for w in weights)
    for epoch in range(epochs):
        ws.gradients(*weights, grads, None if losses is None else losses[:, epoch])
        for w, g in zip(weights, grads):
            g *= learning_rate
            w -= g
    if losses is not None:
        ws.gradients(*weights, grads, losses[:, epochs])
    return weights


def _check_train_inputs(params: NetworkParams, train_set: Sequence[LabeledExample]):
    if not train_set:
        raise EmptyTrainSet("cannot train on an empty set")
    x, y = feature_matrix(train_set)
    if x.shape[1] != params.shape[0]:
        raise DimensionMismatch(f"network expects {params.shape[0]} features, examples have {x.shape[1]}")
    targets = np.zeros((len(y), params.shape[2]))
    targets[np.arange(len(y)), y] = 1.0
    return x, targets


def mean_gradient(params: NetworkParams, train_set: Sequence[LabeledExample]) -> tuple[float, Gradients]:
    """Mean loss and mean gradient over ``train_set``, as used by each training step."""
    x, targets = _check_train_inputs(params, train_set)
    mean_loss, grads = _stacked_gradients(
        x[None], targets[None], *(a[None] for a in params.arrays())
    )
    return float(mean_loss[0]), Gradients(*(g[0] for g in grads))


def train_many(
    params: Sequence[NetworkParams],
    train_sets: Sequence[Sequence[LabeledExample]],
    cfg: TrainConfig,
    *,
    return_losses: bool = False,
):
    """Train independent networks, batching those with equal set size and shape.

    Returns the trained parameters in input order, plus per-network loss
    histories of length ``epochs + 1`` when ``return_losses`` is set.
    """
    if len(params) != len(train_sets):
        raise ValueError("need one train set per network")
    prepared = [_check_train_inputs(p, s) for p, s in zip(params, train_sets)]
    groups: dict[tuple, list[int]] = {}
    for i, (p, (x, _)) in enumerate(zip(params, prepared)):
        groups.setdefault((p.shape, x.shape[0]), []).append(i)

    trained: list[NetworkParams | None] = [None] * len(params)
    histories: list[np.ndarray | None] = [None] * len(params)
    for members in groups.values():
        x = np.stack([prepared[i][0] for i in members])
        targets = np.stack([prepared[i][1] for i in members])
        weights = [np.stack([params[i].arrays()[k] for i in members]) for k in range(4)]
        losses = np.empty((len(members), cfg.epochs + 1)) if return_losses else None
        w1, b1, w2, b2 = _descend(x, targets, weights, cfg.learning_rate, cfg.epochs, losses)
        for j, i in enumerate(members):
            trained[i] = NetworkParams(w1[j], b1[j], w2[j], b2[j], params[i].seed)
            if losses is not None:
                histories[i] = losses[j]
    if return_losses:
        return trained, histories
    return trained


def train(params: NetworkParams, train_set: Sequence[LabeledExample], cfg: TrainConfig) -> NetworkParams:
    return train_many([params], [train_set], cfg)[0]


def train_with_history(
    params: NetworkParams, train_set: Sequence[LabeledExample], cfg: TrainConfig
) -> tuple[NetworkParams, np.ndarray]:
    """Train and also return the mean loss before each epoch and after the last."""
    trained, histories = train_many([params], [train_set], cfg, return_losses=True)
    return trained[0], histories[0]
