"""Two-hidden-layer tanh/softmax perceptron with cross-entropy loss."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .scg import scg

_TINY = 1e-300


@dataclass
class Mlp:
    """Layer ``l`` maps ``x -> x @ weights[l] + biases[l]``.

    Hidden layers use tanh, the output layer softmax.
    """

    sizes: tuple
    weights: list
    biases: list

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) != 4 or self.sizes[1] != self.sizes[2]:
            raise DomainError(f"need [n_in, N, N, n_out] layer sizes, got {self.sizes}")

    @classmethod
    def init(cls, n_in, n_hidden, n_out=10, seed=0):
        """Glorot-uniform weights and zero biases from ``seed``."""
        rng = np.random.default_rng(seed)
        sizes = (n_in, n_hidden, n_hidden, n_out)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases)

    @property
    def n_params(self):
        return sum(a * b + b for a, b in zip(self.sizes[:-1], self.sizes[1:]))

    def flatten(self):
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def with_params(self, theta):
        return Mlp(self.sizes, *unflatten(theta, self.sizes))

    def activations(self, x, hidden=np.tanh):
        out = [x]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = out[-1] @ w + b
            out.append(softmax(z) if l == len(self.weights) - 1 else hidden(z))
        return out

    def predict_proba(self, x):
        return self.activations(x)[-1]

    def predict(self, x):
        return np.argmax(self.predict_proba(x), axis=1)

    def to_dict(self):
        return {
            "format": "mramsim-mlp",
            "layer_sizes": list(self.sizes),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "mramsim-mlp":
            raise DomainError(f"not a float network document (format={d.get('format')!r})")
        sizes = tuple(d["layer_sizes"])
        weights = [np.array(w, dtype=np.float64).reshape(a, b)
                   for w, a, b in zip(d["weights"], sizes[:-1], sizes[1:])]
        return cls(sizes, weights, [np.array(b, dtype=np.float64) for b in d["biases"]])

    def to_json(self, **extra):
        return json.dumps({**self.to_dict(), **extra})


def unflatten(theta, sizes):
    weights, biases, pos = [], [], 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(theta[pos:pos + a * b].reshape(a, b))
        pos += a * b
        biases.append(theta[pos:pos + b])
        pos += b
    if pos != theta.size:
        raise DomainError(f"parameter vector has {theta.size} entries, expected {pos}")
    return weights, biases


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs, targets):
    """Mean over samples of ``-sum_c t_c log p_c``."""
    return float(-np.sum(targets * np.log(np.maximum(probs, _TINY))) / len(targets))


def loss_and_grad(theta, sizes, x, targets):
    """Cross-entropy and its gradient with respect to the flat parameters."""
    weights, biases = unflatten(theta, sizes)
    acts = [x]
    for l, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(softmax(z) if l == len(weights) - 1 else np.tanh(z))
    loss = cross_entropy(acts[-1], targets)
    grads = []
    delta = (acts[-1] - targets) / len(targets)
    for l in range(len(weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append((acts[l].T @ delta).ravel())
        if l:
            delta = (delta @ weights[l].T) * (1.0 - acts[l] ** 2)
    return loss, np.concatenate(grads[::-1])


def train(data, n_hidden, iterations=300, seed=0, validation=None, patience=25,
          n_classes=10, callback=None):
    """Fit an :class:`Mlp` to ``data`` with scaled conjugate gradient.

    With ``validation`` given, training stops once the validation loss has
    not improved for ``patience`` iterations and the best weights are kept.
    """
    if len(data) == 0:
        raise DomainError("empty training set")
    x = data.images
    t = data.one_hot(n_classes)
    net = Mlp.init(x.shape[1], n_hidden, n_classes, seed)
    sizes = net.sizes

    def fg(theta):
        return loss_and_grad(theta, sizes, x, t)

    best = {"loss": np.inf, "theta": net.flatten(), "since": 0}
    if validation is not None:
        xv, tv = validation.images, validation.one_hot(n_classes)

    def on_iter(state):
        if callback is not None:
            callback(state)
        if validation is None:
            return False
        v_loss = cross_entropy(Mlp(sizes, *unflatten(state.w, sizes)).predict_proba(xv), tv)
        if v_loss < best["loss"]:
            best.update(loss=v_loss, theta=state.w.copy(), since=0)
        else:
            best["since"] += 1
        return best["since"] >= patience

    state = scg(fg, net.flatten(), max_iter=iterations, callback=on_iter)
    theta = best["theta"] if validation is not None and iterations > 0 else state.w
    return net.with_params(theta)
