"""Bilateral-control-based imitation learning and pick-target selection."""

from .container import ContainerError, load_dataset, load_weights, save_dataset, save_weights
from .dataset import ARMS, EpisodeDataset, Normalization, Normalizer, build_dataset, episode_indices
from .inference import NoTargetError, policy_forward, resolve_target, run_inference
from .network import PRESETS, Adam, LSTMPolicy, NetworkParams, backward, forward, mse_loss
from .selection import ObjectScene, select_target
from .train import TrainingError, TrainResult, evaluate, train

__all__ = [
    "ARMS",
    "PRESETS",
    "Adam",
    "ContainerError",
    "EpisodeDataset",
    "LSTMPolicy",
    "NetworkParams",
    "NoTargetError",
    "Normalization",
    "Normalizer",
    "ObjectScene",
    "TrainResult",
    "TrainingError",
    "backward",
    "build_dataset",
    "episode_indices",
    "evaluate",
    "forward",
    "load_dataset",
    "load_weights",
    "mse_loss",
    "policy_forward",
    "resolve_target",
    "run_inference",
    "save_dataset",
    "save_weights",
    "select_target",
    "train",
]
