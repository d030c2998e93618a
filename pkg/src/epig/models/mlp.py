"""Fully connected ReLU network with dropout, trained by full-batch gradient descent.

Dropout (inverted scaling) acts on hidden activations and stays on at
prediction time; each posterior draw is one dropout mask shared by every input
in a call.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax

from ..errors import TrainingError
from .base import as_inputs


def init_params(sizes, rng) -> list[np.ndarray]:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(rng.uniform(-bound, bound, size=fan_out))
    return params


def forward(params, x, masks=None, rate: float = 0.0):
    """Logits plus the cache needed for backprop.

    ``masks`` holds one boolean keep-mask per hidden layer, broadcastable
    against that layer's activations; ``None`` disables dropout.
    """
    n_layers = len(params) // 2
    h = x
    cache = [x]
    for layer in range(n_layers - 1):
        pre = h @ params[2 * layer] + params[2 * layer + 1]
        h = np.maximum(pre, 0.0)
        if masks is not None and rate > 0:
            h = h * masks[layer] / (1.0 - rate)
        cache.append(h)
    logits = h @ params[-2] + params[-1]
    return logits, cache


def loss_and_grad(params, x, y, masks=None, rate: float = 0.0, l2: float = 0.0):
    """Mean NLL plus ``0.5 * l2 * |params|^2``, and its gradient."""
    n = x.shape[0]
    logits, cache = forward(params, x, masks, rate)
    logp = log_softmax(logits, axis=1)
    nll = -logp[np.arange(n), y].mean()
    loss = nll + 0.5 * l2 * sum(float(np.sum(p * p)) for p in params)
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = [None] * len(params)
    n_layers = len(params) // 2
    for layer in range(n_layers - 1, -1, -1):
        h_in = cache[layer]
        grads[2 * layer] = h_in.T @ delta + l2 * params[2 * layer]
        grads[2 * layer + 1] = delta.sum(0) + l2 * params[2 * layer + 1]
        if layer == 0:
            break
        delta = delta @ params[2 * layer].T
        # cache[layer] is post-ReLU (and post-dropout): zero exactly where the
        # unit was inactive or dropped
        delta = delta * (h_in > 0)
        if masks is not None and rate > 0:
            delta = delta / (1.0 - rate)
    return loss, grads


def nll(params, x, y) -> float:
    logits, _ = forward(params, x)
    return float(-log_softmax(logits, axis=1)[np.arange(x.shape[0]), y].mean())


class DropoutMLP:
    def __init__(
        self,
        num_classes: int,
        hidden: tuple[int, ...] = (128, 128, 128),
        dropout: float = 0.1,
        lr: float = 0.1,
        l2: float = 1e-4,
        max_steps: int = 50_000,
        patience: int = 10_000,
        default_k: int = 100,
    ):
        self.num_classes = int(num_classes)
        self.hidden = tuple(int(h) for h in hidden)
        self.dropout = float(dropout)
        self.lr = float(lr)
        self.l2 = float(l2)
        self.max_steps = int(max_steps)
        self.patience = int(patience)
        self.default_k = int(default_k)
        self.params: list[np.ndarray] = []
        self.initial_params: list[np.ndarray] = []
        self.best_val_nll = np.nan
        self.initial_val_nll = np.nan
        self.steps_run = 0

    def fit(self, data, seed=None, validation=None) -> "DropoutMLP":
        if len(data) == 0 or validation is None or len(validation) == 0:
            raise ValueError("MLP training needs non-empty training and validation sets")
        rng = np.random.default_rng(seed)
        x, y = data.inputs, data.labels
        vx, vy = validation.inputs, validation.labels
        params = init_params((x.shape[1], *self.hidden, self.num_classes), rng)
        self.initial_params = [p.copy() for p in params]
        best = [p.copy() for p in params]
        best_val = self.initial_val_nll = nll(params, vx, vy)
        since = 0
        step = 0
        for step in range(self.max_steps):
            if since >= self.patience:
                break
            masks = None
            if self.dropout > 0:
                masks = [rng.random((x.shape[0], w)) >= self.dropout for w in self.hidden]
            loss, grads = loss_and_grad(params, x, y, masks, self.dropout, self.l2)
            if not np.isfinite(loss):
                raise TrainingError(f"training loss became non-finite at step {step}")
            for p, g in zip(params, grads):
                p -= self.lr * g
            val = nll(params, vx, vy)
            if not np.isfinite(val):
                raise TrainingError(f"validation NLL became non-finite at step {step}")
            if val < best_val:
                best_val = val
                best = [p.copy() for p in params]
                since = 0
            else:
                since += 1
        else:
            step = self.max_steps
        self.steps_run = step
        self.params = best
        self.best_val_nll = best_val
        return self

    def sample_masks(self, k: int, seed) -> list[np.ndarray]:
        rng = np.random.default_rng(seed)
        return [rng.random((k, w)) >= self.dropout for w in self.hidden]

    def posterior_draws(self, k: int | None, seed, anchors=None) -> "MLPDraws":
        k = self.default_k if k is None else int(k)
        return MLPDraws(self, self.sample_masks(k, seed))

    def predict_samples(self, inputs, k: int | None = None, seed=0) -> np.ndarray:
        return self.posterior_draws(k, seed).predict(inputs)

    def predict_proba(self, inputs, seed=0) -> np.ndarray:
        """Marginal predictive: mean over ``default_k`` dropout masks."""
        return self.predict_samples(inputs, None, seed).mean(axis=1)


class MLPDraws:
    def __init__(self, model: DropoutMLP, masks: list[np.ndarray]):
        self.model = model
        self.masks = masks
        self.num_samples = masks[0].shape[0]

    def predict(self, inputs) -> np.ndarray:
        x = as_inputs(inputs)
        m = self.model
        out = np.empty((x.shape[0], self.num_samples, m.num_classes))
        for k in range(self.num_samples):
            logits, _ = forward(m.params, x, [mask[k] for mask in self.masks], m.dropout)
            out[:, k] = softmax(logits, axis=1)
        return out
