"""Truncated-BPTT training of the policy with Adam."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import EpisodeDataset
from .network import Adam, NetworkParams, backward, forward


class TrainingError(RuntimeError):
    """Loss or gradients became non-finite."""


@dataclass
class TrainResult:
    net: NetworkParams
    optimizer: Adam
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    steps: int = 0


def _pad(seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    T = max(len(s) for s in seqs)
    out = np.zeros((len(seqs), T, seqs[0].shape[1]))
    mask = np.zeros((len(seqs), T))
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    return out, mask


def _shard_grads(net, X, C, Y, M, state, count):
    """Gradients of the summed squared error / count for one shard, plus its SSE and carry state."""
    out, cache, new_state = forward(net, X, C, state)
    diff = (out - Y) * M[..., None]
    grads = backward(net, cache, 2.0 * diff / count)
    return grads, float(np.sum(diff**2)), new_state


def _split_state(state, parts):
    if state is None:
        return [None] * len(parts)
    h, c = state
    return [([a[p] for a in h], [a[p] for a in c]) for p in parts]


def _join_state(states):
    h = [np.concatenate([s[0][layer] for s in states]) for layer in range(len(states[0][0]))]
    c = [np.concatenate([s[1][layer] for s in states]) for layer in range(len(states[0][1]))]
    return h, c


def evaluate(net: NetworkParams, dataset: EpisodeDataset, indices=None, clean: bool = True) -> float:
    """Mean squared one-step error over the given episodes (whole sequences, no truncation)."""
    indices = dataset.split(False) if indices is None else np.asarray(indices)
    if len(indices) == 0:
        return float("nan")
    xs, ys = zip(*(dataset.pairs(i, clean=clean) for i in indices))
    X, M = _pad(list(xs))
    Y, _ = _pad(list(ys))
    out, _, _ = forward(net, X, dataset.coords[indices], keep_cache=False)
    count = M.sum() * Y.shape[-1]
    return float(np.sum(((out - Y) * M[..., None]) ** 2) / count)


def train(
    net: NetworkParams,
    dataset: EpisodeDataset,
    lr: float = 1e-3,
    epochs: int = 10,
    seed: int = 0,
    batch_size: int = 16,
    window: int = 100,
    workers: int = 1,
    max_steps: int | None = None,
    callback=None,
) -> TrainResult:
    """Minimise one-step-ahead MSE on the train split.

    Episodes are shuffled each epoch and processed in batches; each batch is
    walked in windows of ``window`` steps with the recurrent state carried
    across windows but gradients cut between them (one Adam step per window).
    With ``workers > 1`` the batch is split into contiguous shards whose
    gradients are summed in shard order.

    The input ``net`` is not modified.
    """
    train_idx = dataset.split(True)
    if len(train_idx) == 0:
        raise ValueError("the dataset has no training episodes")
    if window < 1 or batch_size < 1 or workers < 1:
        raise ValueError("window, batch_size and workers must be >= 1")
    if (dataset.n_in, dataset.n_out) != (net.n_in, net.n_out):
        raise ValueError(
            f"network is {net.n_in}->{net.n_out} but the dataset is {dataset.n_in}->{dataset.n_out}"
        )
    net = net.copy()
    opt = Adam(lr=lr)
    result = TrainResult(net, opt)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 30]))
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for epoch in range(epochs):
            order = rng.permutation(train_idx)
            sse_total, count_total = 0.0, 0.0
            for b0 in range(0, len(order), batch_size):
                batch = order[b0 : b0 + batch_size]
                xs, ys = zip(*(dataset.pairs(i) for i in batch))
                X, M = _pad(list(xs))
                Y, _ = _pad(list(ys))
                C = dataset.coords[batch]
                parts = np.array_split(np.arange(len(batch)), min(workers, len(batch)))
                state = None
                for s0 in range(0, X.shape[1], window):
                    sl = slice(s0, s0 + window)
                    count = M[:, sl].sum() * Y.shape[-1]
                    if count == 0:
                        break
                    if pool is None or len(parts) == 1:
                        grads, sse, state = _shard_grads(net, X[:, sl], C, Y[:, sl], M[:, sl], state, count)
                    else:
                        states = _split_state(state, parts)
                        jobs = [
                            pool.submit(_shard_grads, net, X[p, sl], C[p], Y[p, sl], M[p, sl], st, count)
                            for p, st in zip(parts, states)
                        ]
                        results = [j.result() for j in jobs]
                        grads = results[0][0]
                        for other in results[1:]:
                            for k in grads:
                                grads[k] = grads[k] + other[0][k]
                        sse = sum(r[1] for r in results)
                        state = _join_state([r[2] for r in results])
                    if not np.isfinite(sse) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                        raise TrainingError(
                            f"non-finite loss at epoch {epoch}, batch starting {b0}, step {s0} "
                            f"(loss={sse / count!r}, adam step {opt.step_count})"
                        )
                    opt.step(net, grads)
                    result.steps += 1
                    sse_total += sse
                    count_total += count
                    if max_steps is not None and result.steps >= max_steps:
                        break
                if max_steps is not None and result.steps >= max_steps:
                    break
            result.train_loss.append(sse_total / count_total)
            result.val_loss.append(evaluate(net, dataset))
            if callback is not None:
                callback(epoch, result)
            if max_steps is not None and result.steps >= max_steps:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return result
