"""Small differentiable classifiers with per-sample analytic gradients.

Parameters live in one flat float64 vector. Layers are stored in order,
input to output, each as a row-major ``(out, in)`` weight block followed by
its ``out`` biases. ``logistic`` is the zero-hidden-layer case; ``mlp``
uses tanh hidden units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import log_softmax

from tracseq.dataset import Sample

KINDS = ("logistic", "mlp")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    feature_dim: int
    num_classes: int
    hidden_dims: tuple[int, ...] = field(default_factory=tuple)
    init_seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "logistic" and self.hidden_dims:
            raise ValueError("logistic models take no hidden_dims")
        if self.kind == "mlp" and not self.hidden_dims:
            raise ValueError("mlp models need at least one hidden layer")
        if self.feature_dim < 1 or self.num_classes < 2:
            raise ValueError("feature_dim must be >= 1 and num_classes >= 2")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden layer widths must be >= 1")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.feature_dim, *self.hidden_dims, self.num_classes]

    @property
    def num_params(self) -> int:
        sizes = self.layer_sizes
        return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "feature_dim": self.feature_dim,
            "num_classes": self.num_classes,
            "hidden_dims": list(self.hidden_dims),
            "init_seed": self.init_seed,
            "init_scale": self.init_scale,
        }

    @classmethod
    def from_json(cls, obj: dict) -> ModelSpec:
        return cls(
            kind=obj["kind"],
            feature_dim=int(obj["feature_dim"]),
            num_classes=int(obj["num_classes"]),
            hidden_dims=tuple(obj.get("hidden_dims", ())),
            init_seed=int(obj.get("init_seed", 0)),
            init_scale=float(obj.get("init_scale", 0.1)),
        )

    # -- batched primitives -------------------------------------------------

    def _unpack(self, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        params = np.asarray(params, dtype=np.float64)
        if params.ndim != 1 or params.shape[0] != self.num_params:
            raise ValueError(
                f"parameter vector has shape {params.shape}, expected ({self.num_params},)"
            )
        layers, pos = [], 0
        sizes = self.layer_sizes
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            W = params[pos : pos + fan_out * fan_in].reshape(fan_out, fan_in)
            pos += fan_out * fan_in
            b = params[pos : pos + fan_out]
            pos += fan_out
            layers.append((W, b))
        return layers

    def _check_inputs(self, X: np.ndarray, y: np.ndarray | None = None):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"inputs have {X.shape[1]} features, expected {self.feature_dim}")
        if y is None:
            return X, None
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        if y.shape[0] != X.shape[0]:
            raise ValueError("inputs and labels differ in length")
        if np.any(y < 0) or np.any(y >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        return X, y

    def _forward(self, layers, X):
        acts = [X]
        h = X
        for W, b in layers[:-1]:
            h = np.tanh(h @ W.T + b)
            acts.append(h)
        W, b = layers[-1]
        return acts, h @ W.T + b

    def logits(self, params, X) -> np.ndarray:
        X, _ = self._check_inputs(X)
        return self._forward(self._unpack(params), X)[1]

    def predict_proba(self, params, X) -> np.ndarray:
        return np.exp(log_softmax(self.logits(params, X), axis=1))

    def losses(self, params, X, y) -> np.ndarray:
        """Per-row cross-entropy."""
        X, y = self._check_inputs(X, y)
        logp = log_softmax(self._forward(self._unpack(params), X)[1], axis=1)
        return -logp[np.arange(len(y)), y]

    def per_sample_grads(self, params, X, y) -> np.ndarray:
        """Gradient of each row's loss; shape ``(n, num_params)``."""
        X, y = self._check_inputs(X, y)
        layers = self._unpack(params)
        acts, z = self._forward(layers, X)
        n = X.shape[0]
        delta = np.exp(log_softmax(z, axis=1))
        delta[np.arange(n), y] -= 1.0
        blocks = []
        for li in range(len(layers) - 1, -1, -1):
            h = acts[li]
            blocks.append(delta)
            blocks.append((delta[:, :, None] * h[:, None, :]).reshape(n, -1))
            if li > 0:
                W = layers[li][0]
                delta = (delta @ W) * (1.0 - h * h)
        return np.concatenate(blocks[::-1], axis=1)

    def mean_grad(self, params, X, y) -> np.ndarray:
        return self.per_sample_grads(params, X, y).mean(axis=0)

    def sample_grads(self, params, samples: Sequence[Sample]) -> np.ndarray:
        if not samples:
            return np.zeros((0, self.num_params))
        X = np.array([s.features for s in samples], dtype=np.float64)
        y = np.array([s.label for s in samples], dtype=np.int64)
        return self.per_sample_grads(params, X, y)


def init_params(spec: ModelSpec) -> np.ndarray:
    """Uniform weights in ``[-init_scale, init_scale]``, zero biases."""
    rng = np.random.default_rng(spec.init_seed)
    out = np.zeros(spec.num_params)
    pos = 0
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        nw = fan_in * fan_out
        out[pos : pos + nw] = rng.uniform(-spec.init_scale, spec.init_scale, size=nw)
        pos += nw + fan_out
    return out


def _xy(spec: ModelSpec, z: Sample):
    if len(z.features) != spec.feature_dim:
        raise ValueError(
            f"sample {z.id!r} has {len(z.features)} features, expected {spec.feature_dim}"
        )
    return np.asarray(z.features, dtype=np.float64)[None, :], np.array([z.label])


def loss(spec: ModelSpec, params: np.ndarray, z: Sample) -> float:
    X, y = _xy(spec, z)
    return float(spec.losses(params, X, y)[0])


def grad(spec: ModelSpec, params: np.ndarray, z: Sample) -> np.ndarray:
    X, y = _xy(spec, z)
    return spec.per_sample_grads(params, X, y)[0]


def predict(spec: ModelSpec, params: np.ndarray, z: Sample) -> np.ndarray:
    X, _ = _xy(spec, z)
    return spec.predict_proba(params, X)[0]


def grad_check(spec: ModelSpec, params: np.ndarray, z: Sample, h: float = 1e-6) -> float:
    """Max relative error between the analytic gradient and central differences.

    Coordinate j is perturbed by ``h * (1 + |w_j|)``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    params = np.asarray(params, dtype=np.float64)
    analytic = grad(spec, params, z)
    worst = 0.0
    for j in range(params.shape[0]):
        step = h * (1.0 + abs(params[j]))
        up, down = params.copy(), params.copy()
        up[j] += step
        down[j] -= step
        numeric = (loss(spec, up, z) - loss(spec, down, z)) / (2.0 * step)
        err = abs(analytic[j] - numeric) / (abs(numeric) + 1e-12)
        worst = max(worst, err)
    return worst
