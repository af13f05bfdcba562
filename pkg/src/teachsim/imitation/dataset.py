"""Training corpus for the imitation policy.

Each 500 Hz teach log is cut into 10 interleaved 50 Hz episodes (start
offsets 0..9 samples). Inputs are the follower response of one arm, targets
the leader response of the same arm; the network learns to predict the
target one 50 Hz step ahead of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..motionlog import MotionLog
from ..params import CONTROL_RATE

STRIDE = 10
MIN_ROWS = 20
STD_FLOOR = 1e-12
ARMS = {"right": tuple(range(0, 8)), "left": tuple(range(8, 16))}


@dataclass(frozen=True)
class Normalizer:
    """Per-channel affine map to zero mean and unit standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, samples: np.ndarray) -> Normalizer:
        samples = np.asarray(samples, dtype=float)
        mean = samples.mean(axis=0)
        std = samples.std(axis=0)
        # constant channels are only centred
        std = np.where(std < STD_FLOOR, 1.0, std)
        return cls(mean, std)

    @classmethod
    def identity(cls, width: int) -> Normalizer:
        return cls(np.zeros(width), np.ones(width))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean


@dataclass(frozen=True)
class Normalization:
    """Everything needed to move between raw and network units for one arm."""

    joints: tuple
    state: Normalizer
    target: Normalizer
    coords: Normalizer

    @property
    def width(self) -> int:
        return 3 * len(self.joints)


def arm_state(theta: np.ndarray, omega: np.ndarray, tau: np.ndarray, joints) -> np.ndarray:
    """Concatenate angle, velocity and torque of ``joints`` along the last axis."""
    j = list(joints)
    return np.concatenate([theta[..., j], omega[..., j], tau[..., j]], axis=-1)


def episode_indices(n_rows: int, stride: int = STRIDE) -> list[np.ndarray]:
    """Source row indices of the ``stride`` offset-downsampled episodes."""
    steps = n_rows // stride
    return [offset + stride * np.arange(steps) for offset in range(stride)]


@dataclass
class EpisodeDataset:
    """Normalized 50 Hz episodes.

    ``inputs[i]`` and ``targets[i]`` are (T_i, 3 * n_joints) arrays aligned in
    time; training pairs ``inputs[i][t]`` with ``targets[i][t + 1]``.
    ``clean_inputs`` are the inputs before noise injection.
    """

    inputs: list
    targets: list
    coords: np.ndarray
    train: np.ndarray
    norm: Normalization
    clean_inputs: list = field(default=None)
    source: np.ndarray = field(default=None)
    offset: np.ndarray = field(default=None)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.inputs)
        self.coords = np.asarray(self.coords, dtype=float).reshape(n, -1)
        self.train = np.asarray(self.train, dtype=bool).reshape(n)
        if self.clean_inputs is None:
            self.clean_inputs = [x.copy() for x in self.inputs]
        if self.source is None:
            self.source = np.arange(n)
        if self.offset is None:
            self.offset = np.zeros(n, dtype=int)
        if len(self.targets) != n:
            raise ValueError("inputs and targets must have the same number of episodes")
        for x, y in zip(self.inputs, self.targets):
            if x.shape[0] != y.shape[0]:
                raise ValueError("episode input/target lengths differ")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def n_in(self) -> int:
        return self.inputs[0].shape[1]

    @property
    def n_out(self) -> int:
        return self.targets[0].shape[1]

    def split(self, train: bool) -> np.ndarray:
        return np.flatnonzero(self.train == train)

    def pairs(self, i: int, clean: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """One-step-ahead (input, target) sequences of episode ``i``."""
        x = self.clean_inputs[i] if clean else self.inputs[i]
        return x[:-1], self.targets[i][1:]


def build_dataset(
    logs: list[MotionLog],
    coords=None,
    noise_variance: float = 0.01,
    seed: int = 0,
    validation: int = 3,
    joints="right",
    stride: int = STRIDE,
) -> EpisodeDataset:
    """Augment, split, normalize and add input noise.

    Args:
        logs: 500 Hz teach logs for one arm.
        coords: per-log object coordinates, shape (n_logs, 2). Defaults to
            each log's ``metadata["target_xy"]``.
        noise_variance: variance of the Gaussian noise added to the
            normalized training inputs (object coordinates excluded).
        validation: how many of the last logs form the validation split.
        joints: "right", "left" or an explicit joint index sequence.
    """
    if not logs:
        raise ValueError("no logs given")
    if noise_variance < 0:
        raise ValueError("noise_variance must be >= 0")
    if not 0 <= validation < len(logs):
        raise ValueError("validation count must leave at least one training log")
    joints = ARMS[joints] if isinstance(joints, str) else tuple(int(j) for j in joints)
    if coords is None:
        coords = [log.metadata.get("target_xy") for log in logs]
        if any(c is None for c in coords):
            raise ValueError("object coordinates missing: pass coords or set metadata['target_xy']")
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] != len(logs):
        raise ValueError("coords must have one row per log")

    raw_x, raw_y, ep_xy, train, source, offset = [], [], [], [], [], []
    for i, log in enumerate(logs):
        if len(log) < MIN_ROWS:
            raise ValueError(f"log {i} has {len(log)} rows; at least {MIN_ROWS} needed")
        if abs(log.rate - CONTROL_RATE) > 1e-9:
            raise ValueError(f"log {i} is not sampled at {CONTROL_RATE} Hz")
        follower = arm_state(log.theta_f, log.omega_f, log.tau_f, joints)
        leader = arm_state(log.theta_l, log.omega_l, log.tau_l, joints)
        for o, rows in enumerate(episode_indices(len(log), stride)):
            raw_x.append(follower[rows])
            raw_y.append(leader[rows])
            ep_xy.append(coords[i])
            train.append(i < len(logs) - validation)
            source.append(i)
            offset.append(o)

    train = np.array(train)
    ep_xy = np.array(ep_xy)
    tr = np.flatnonzero(train)
    norm = Normalization(
        joints=joints,
        state=Normalizer.fit(np.vstack([raw_x[i] for i in tr])),
        target=Normalizer.fit(np.vstack([raw_y[i] for i in tr])),
        coords=Normalizer.fit(ep_xy[tr]),
    )
    clean = [norm.state.normalize(x) for x in raw_x]
    targets = [norm.target.normalize(y) for y in raw_y]

    rng = np.random.default_rng(np.random.SeedSequence([seed, 20]))
    sigma = float(np.sqrt(noise_variance))
    inputs = []
    for x, is_train in zip(clean, train):
        if is_train and sigma > 0:
            inputs.append(x + rng.normal(0.0, sigma, x.shape))
        else:
            inputs.append(x.copy())

    return EpisodeDataset(
        inputs=inputs,
        targets=targets,
        coords=norm.coords.normalize(ep_xy),
        train=train,
        norm=norm,
        clean_inputs=clean,
        source=np.array(source),
        offset=np.array(offset),
        metadata={"noise_variance": noise_variance, "seed": seed, "stride": stride, "n_logs": len(logs)},
    )
