"""Stacked LSTM policy with per-layer coordinate injection, in plain numpy.

Every layer's gate pre-activation receives ``C_l @ xy`` on top of the usual
input and recurrent terms, so the object coordinates reach all layers
directly. Gate order inside the 4H blocks is input, forget, cell, output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PRESETS = {"desk": (2, 16), "paper": (8, 120)}


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class NetworkParams:
    n_in: int
    n_out: int
    hidden: int
    layers: int
    n_coord: int = 2
    weights: dict = field(default_factory=dict)

    @classmethod
    def init(
        cls, n_in: int, n_out: int, hidden: int = 120, layers: int = 8, n_coord: int = 2, seed: int = 0
    ) -> NetworkParams:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 10]))
        scale = 1.0 / np.sqrt(hidden)
        w = {}
        for layer in range(layers):
            n_prev = n_in if layer == 0 else hidden
            w[f"W{layer}"] = rng.uniform(-scale, scale, (4 * hidden, n_prev + hidden))
            b = np.zeros(4 * hidden)
            b[hidden : 2 * hidden] = 1.0
            w[f"b{layer}"] = b
            w[f"C{layer}"] = rng.uniform(-scale, scale, (4 * hidden, n_coord))
        w["Wy"] = rng.uniform(-scale, scale, (n_out, hidden))
        w["by"] = np.zeros(n_out)
        return cls(n_in, n_out, hidden, layers, n_coord, w)

    @classmethod
    def preset(cls, name: str, n_in: int, n_out: int, seed: int = 0) -> NetworkParams:
        layers, hidden = PRESETS[name]
        return cls.init(n_in, n_out, hidden, layers, seed=seed)

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.weights.items()}

    def copy(self) -> NetworkParams:
        return NetworkParams(
            self.n_in, self.n_out, self.hidden, self.layers, self.n_coord, {k: v.copy() for k, v in self.weights.items()}
        )

    def initial_state(self, batch: int) -> tuple[list, list]:
        h = [np.zeros((batch, self.hidden)) for _ in range(self.layers)]
        c = [np.zeros((batch, self.hidden)) for _ in range(self.layers)]
        return h, c

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.weights.values())


@dataclass
class Cache:
    coords: np.ndarray
    steps: list = field(default_factory=list)  # per time step: list of per-layer tuples
    top: list = field(default_factory=list)


def forward(net: NetworkParams, X: np.ndarray, coords: np.ndarray, state=None, keep_cache: bool = True):
    """Run a batch of sequences.

    X is (B, T, n_in), coords (B, n_coord). Returns ``(Y, cache, state)``
    with Y of shape (B, T, n_out) and ``state = (h, c)`` per layer at the end.
    """
    B, T, _ = X.shape
    H = net.hidden
    w = net.weights
    h, c = net.initial_state(B) if state is None else ([a.copy() for a in state[0]], [a.copy() for a in state[1]])
    inject = [coords @ w[f"C{layer}"].T + w[f"b{layer}"] for layer in range(net.layers)]
    cache = Cache(coords) if keep_cache else None
    Y = np.empty((B, T, net.n_out))
    for t in range(T):
        inp = X[:, t]
        step = []
        for layer in range(net.layers):
            zin = np.concatenate([inp, h[layer]], axis=1)
            z = zin @ w[f"W{layer}"].T + inject[layer]
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H : 2 * H])
            g = np.tanh(z[:, 2 * H : 3 * H])
            o = _sigmoid(z[:, 3 * H :])
            c_prev = c[layer]
            c[layer] = f * c_prev + i * g
            tc = np.tanh(c[layer])
            h[layer] = o * tc
            if keep_cache:
                step.append((zin, i, f, g, o, c_prev, tc))
            inp = h[layer]
        Y[:, t] = inp @ w["Wy"].T + w["by"]
        if keep_cache:
            cache.steps.append(step)
            cache.top.append(inp)
    return Y, cache, (h, c)


def backward(net: NetworkParams, cache: Cache, dY: np.ndarray) -> dict:
    """Gradients of ``sum(dY * Y)`` with respect to every weight (BPTT over the cached window)."""
    w = net.weights
    H = net.hidden
    grads = net.zeros_like()
    B, T, _ = dY.shape
    dh_next = [np.zeros((B, H)) for _ in range(net.layers)]
    dc_next = [np.zeros((B, H)) for _ in range(net.layers)]
    for t in reversed(range(T)):
        dy = dY[:, t]
        grads["Wy"] += dy.T @ cache.top[t]
        grads["by"] += dy.sum(axis=0)
        d_above = dy @ w["Wy"]
        for layer in reversed(range(net.layers)):
            zin, i, f, g, o, c_prev, tc = cache.steps[t][layer]
            dh = d_above + dh_next[layer]
            dc = dc_next[layer] + dh * o * (1.0 - tc**2)
            dz = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dc * i * (1.0 - g**2),
                    dh * tc * o * (1.0 - o),
                ],
                axis=1,
            )
            grads[f"W{layer}"] += dz.T @ zin
            grads[f"b{layer}"] += dz.sum(axis=0)
            grads[f"C{layer}"] += dz.T @ cache.coords
            dzin = dz @ w[f"W{layer}"]
            n_prev = zin.shape[1] - H
            d_above = dzin[:, :n_prev]
            dh_next[layer] = dzin[:, n_prev:]
            dc_next[layer] = dc * f
    return grads


def mse_loss(Y: np.ndarray, target: np.ndarray, mask: np.ndarray | None = None) -> tuple[float, np.ndarray, int]:
    """Mean squared error over valid entries, its gradient w.r.t. Y, and the entry count."""
    diff = Y - target
    if mask is not None:
        diff = diff * mask[..., None]
        count = int(mask.sum()) * Y.shape[-1]
    else:
        count = diff.size
    count = max(count, 1)
    return float(np.sum(diff**2) / count), 2.0 * diff / count, count


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, net: NetworkParams, grads: dict) -> None:
        self.step_count += 1
        t = self.step_count
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1**t)
            v_hat = self.v[k] / (1 - self.beta2**t)
            net.weights[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class LSTMPolicy:
    """Stateful single-sequence wrapper used for closed-loop inference."""

    def __init__(self, net: NetworkParams):
        self.net = net
        self.state = None

    def reset(self) -> None:
        self.state = None

    def step(self, x: np.ndarray, coords: np.ndarray) -> np.ndarray:
        Y, _, self.state = forward(self.net, x[None, None, :], coords[None, :], self.state, keep_cache=False)
        return Y[0, 0]
