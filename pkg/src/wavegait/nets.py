"""Small tanh MLPs with hand-written backprop, plus an Adam optimizer.

Layers are (W, b) pairs with W of shape (fan_out, fan_in).  Hidden layers
use tanh; the output layer is linear.  Everything is float64 numpy so the
finite-difference gradient checks are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def init_mlp(sizes, rng: np.random.Generator, out_scale: float = 1.0):
    """He-style scaled normal init; the output layer can be shrunk."""
    layers = []
    for k in range(len(sizes) - 1):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        scale = 1.0 / np.sqrt(fan_in)
        if k == len(sizes) - 2:
            scale *= out_scale
        w = rng.normal(0.0, scale, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        layers.append((w, b))
    return layers


def mlp_forward(layers, x):
    """Forward pass over a batch (B, in); returns output and a cache."""
    acts = [np.asarray(x, dtype=float)]
    h = acts[0]
    for k, (w, b) in enumerate(layers):
        z = h @ w.T + b
        h = np.tanh(z) if k < len(layers) - 1 else z
        acts.append(h)
    return h, acts


def mlp_backward(layers, acts, dout):
    """Gradients of sum(dout * out) w.r.t. every (W, b)."""
    grads = [None] * len(layers)
    delta = np.asarray(dout, dtype=float)
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        h_in = acts[k]
        if k < len(layers) - 1:
            delta = delta * (1.0 - acts[k + 1] ** 2)
        grads[k] = (delta.T @ h_in, delta.sum(axis=0))
        if k > 0:
            delta = delta @ w
    return grads


def flatten_layers(layers):
    return np.concatenate([p.ravel() for w_b in layers for p in w_b])


def unflatten_layers(vec, template):
    out, pos = [], 0
    for w, b in template:
        w2 = vec[pos : pos + w.size].reshape(w.shape)
        pos += w.size
        b2 = vec[pos : pos + b.size].reshape(b.shape)
        pos += b.size
        out.append((w2, b2))
    if pos != vec.size:
        raise ConfigurationError("flat vector does not match layer template")
    return out


@dataclass
class Adam:
    """First-order optimizer with per-parameter adaptive moments.

    Update rule (ascent):
        m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
        m_hat = m / (1 - b1^t)      v_hat = v / (1 - b2^t)
        p <- p + lr * m_hat / (sqrt(v_hat) + eps)
    """

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict):
        """Ascend each named array in `params` along `grads` in place."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            p = params[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p += self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
