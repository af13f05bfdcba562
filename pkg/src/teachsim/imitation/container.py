"""Versioned ``.npz`` containers for datasets and trained weights.

Layout (all arrays; no pickled objects):

* ``format``: "teachsim-dataset" or "teachsim-weights"
* ``version``: container version (currently 1)
* ``meta``: JSON string with shapes, joints and free-form metadata
* ``norm/*``: the normalization-stats block (state, target and coordinate
  mean/std), present in both kinds
* dataset: ``inputs``, ``clean_inputs``, ``targets`` concatenated along time
  with ``lengths``; ``coords``, ``train``, ``source``, ``offset``
* weights: ``w/<name>`` per tensor; optional ``adam/m/<name>``,
  ``adam/v/<name>`` and the step count in ``meta``
"""

from __future__ import annotations

import json

import numpy as np

from ..npzio import write_npz
from .dataset import EpisodeDataset, Normalization, Normalizer
from .network import Adam, NetworkParams

VERSION = 1


class ContainerError(ValueError):
    """The file is not a readable container of the expected kind/version."""


def _norm_arrays(norm: Normalization) -> dict:
    out = {}
    for name in ("state", "target", "coords"):
        n = getattr(norm, name)
        out[f"norm/{name}/mean"] = n.mean
        out[f"norm/{name}/std"] = n.std
    return out


def _norm_from(data, joints) -> Normalization:
    parts = {name: Normalizer(data[f"norm/{name}/mean"], data[f"norm/{name}/std"]) for name in ("state", "target", "coords")}
    return Normalization(joints=tuple(joints), **parts)


def _write(path, kind: str, meta: dict, arrays: dict) -> None:
    arrays = dict(arrays, format=np.array(kind), version=np.array(VERSION), meta=np.array(json.dumps(meta, sort_keys=True)))
    write_npz(path, arrays)


def _read(path, kind: str):
    try:
        with np.load(path, allow_pickle=False) as npz:
            data = {k: npz[k] for k in npz.files}
    except (OSError, ValueError) as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from None
    if "format" not in data or str(data["format"]) != kind:
        raise ContainerError(f"{path} is not a {kind} container")
    if int(data["version"]) != VERSION:
        raise ContainerError(f"{path} has unsupported version {int(data['version'])}")
    return data, json.loads(str(data["meta"]))


def save_dataset(dataset: EpisodeDataset, path) -> None:
    meta = {"joints": list(dataset.norm.joints), "metadata": dataset.metadata}
    arrays = {
        "lengths": np.array([len(x) for x in dataset.inputs]),
        "inputs": np.vstack(dataset.inputs),
        "clean_inputs": np.vstack(dataset.clean_inputs),
        "targets": np.vstack(dataset.targets),
        "coords": dataset.coords,
        "train": dataset.train,
        "source": dataset.source,
        "offset": dataset.offset,
    }
    arrays.update(_norm_arrays(dataset.norm))
    _write(path, "teachsim-dataset", meta, arrays)


def load_dataset(path) -> EpisodeDataset:
    data, meta = _read(path, "teachsim-dataset")
    cuts = np.cumsum(data["lengths"])[:-1]
    return EpisodeDataset(
        inputs=np.split(data["inputs"], cuts),
        targets=np.split(data["targets"], cuts),
        clean_inputs=np.split(data["clean_inputs"], cuts),
        coords=data["coords"],
        train=data["train"],
        source=data["source"],
        offset=data["offset"],
        norm=_norm_from(data, meta["joints"]),
        metadata=meta["metadata"],
    )


def save_weights(net: NetworkParams, norm: Normalization, path, optimizer: Adam | None = None, metadata=None) -> None:
    meta = {
        "n_in": net.n_in,
        "n_out": net.n_out,
        "hidden": net.hidden,
        "layers": net.layers,
        "n_coord": net.n_coord,
        "joints": list(norm.joints),
        "metadata": metadata or {},
    }
    arrays = {f"w/{k}": v for k, v in net.weights.items()}
    if optimizer is not None:
        meta["adam"] = {"lr": optimizer.lr, "step": optimizer.step_count}
        arrays.update({f"adam/m/{k}": v for k, v in optimizer.m.items()})
        arrays.update({f"adam/v/{k}": v for k, v in optimizer.v.items()})
    arrays.update(_norm_arrays(norm))
    _write(path, "teachsim-weights", meta, arrays)


def load_weights(path) -> tuple[NetworkParams, Normalization, Adam | None]:
    data, meta = _read(path, "teachsim-weights")
    weights = {k[2:]: data[k] for k in data if k.startswith("w/")}
    net = NetworkParams(meta["n_in"], meta["n_out"], meta["hidden"], meta["layers"], meta["n_coord"], weights)
    expected = NetworkParams.init(net.n_in, net.n_out, net.hidden, net.layers, net.n_coord)
    for k, v in expected.weights.items():
        if k not in weights or weights[k].shape != v.shape:
            raise ContainerError(f"{path}: tensor {k} missing or mis-shaped")
    opt = None
    if "adam" in meta:
        opt = Adam(lr=meta["adam"]["lr"], step_count=meta["adam"]["step"])
        opt.m = {k[7:]: data[k] for k in data if k.startswith("adam/m/")}
        opt.v = {k[7:]: data[k] for k in data if k.startswith("adam/v/")}
    return net, _norm_from(data, meta["joints"]), opt
