"""500 Hz leader/follower response logs, their file formats and transforms.

CSV layout (one row per control tick)::

    # teachsim-motionlog 1 {"rate": 500.0, ...metadata json...}
    t,th_l_1..th_l_19,om_l_1..om_l_19,tq_l_1..tq_l_19,th_f_1..,om_f_1..,tq_f_1..[,tr_l_1..,tr_f_1..]

``th`` is the measured angle (rad), ``om`` the pseudo-differentiated
velocity (rad/s), ``tq`` the RFOB reaction-torque estimate (N m). The
optional ``tr`` block holds the torque reference sent to each robot, which
system identification needs. Values are written with 17 significant digits
so a write/read round trip is bit-exact.

The packed binary variant is an ``.npz`` archive with one array per block,
``t``, and a ``metadata`` JSON string; ``save``/``load`` pick the format from
the file suffix.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .npzio import write_npz
from .observers import FilterState
from .params import CONTROL_RATE, N_JOINTS

FORMAT_TAG = "teachsim-motionlog"
FORMAT_VERSION = 1

RESPONSE_BLOCKS = ("theta_l", "omega_l", "tau_l", "theta_f", "omega_f", "tau_f")
TORQUE_BLOCKS = ("tref_l", "tref_f")
_PREFIX = {
    "theta_l": "th_l",
    "omega_l": "om_l",
    "tau_l": "tq_l",
    "theta_f": "th_f",
    "omega_f": "om_f",
    "tau_f": "tq_f",
    "tref_l": "tr_l",
    "tref_f": "tr_f",
}


class LogFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MotionLog:
    t: np.ndarray
    theta_l: np.ndarray
    omega_l: np.ndarray
    tau_l: np.ndarray
    theta_f: np.ndarray
    omega_f: np.ndarray
    tau_f: np.ndarray
    tref_l: np.ndarray | None = None
    tref_f: np.ndarray | None = None
    rate: float = CONTROL_RATE
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        for name in RESPONSE_BLOCKS + TORQUE_BLOCKS:
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (n, N_JOINTS):
                raise LogFormatError(f"{name} has shape {arr.shape}, expected ({n}, {N_JOINTS})")
            object.__setattr__(self, name, arr)
        if (self.tref_l is None) != (self.tref_f is None):
            raise LogFormatError("tref_l and tref_f must be given together")
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def has_torque_reference(self) -> bool:
        return self.tref_l is not None

    @property
    def duration(self) -> float:
        return len(self) / self.rate

    def blocks(self) -> tuple[str, ...]:
        return RESPONSE_BLOCKS + (TORQUE_BLOCKS if self.has_torque_reference else ())

    def validate(self) -> None:
        """Check the constant-step time grid and finiteness."""
        if len(self) == 0:
            raise LogFormatError("empty log")
        steps = np.diff(self.t)
        if np.any(steps <= 0):
            raise LogFormatError("timestamps must be strictly increasing")
        if len(steps) and not np.allclose(steps, 1.0 / self.rate, rtol=1e-9, atol=1e-12):
            raise LogFormatError("timestamps are not on a constant 1/rate grid")
        for name in self.blocks():
            if not np.all(np.isfinite(getattr(self, name))):
                raise LogFormatError(f"non-finite values in {name}")

    def columns(self) -> list[str]:
        cols = ["t"]
        for name in self.blocks():
            cols += [f"{_PREFIX[name]}_{j + 1}" for j in range(N_JOINTS)]
        return cols

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.t] + [getattr(self, name) for name in self.blocks()])

    def slice(self, start: int, stop: int | None = None) -> MotionLog:
        """Rows ``start:stop`` with timestamps kept as recorded."""
        sl = slice(start, stop)
        kw = {name: getattr(self, name)[sl] for name in self.blocks()}
        return replace(self, t=self.t[sl], **kw)

    def _meta_json(self) -> str:
        meta = dict(self.metadata)
        meta["rate"] = self.rate
        return json.dumps(meta, sort_keys=True)


def _grid(n: int, rate: float) -> np.ndarray:
    return np.arange(n) / rate


def save(log: MotionLog, path: str | os.PathLike) -> None:
    path = Path(path)
    if path.suffix == ".npz":
        arrays = {name: getattr(log, name) for name in log.blocks()}
        arrays.update(
            t=log.t,
            metadata=np.array(log._meta_json()),
            format=np.array(f"{FORMAT_TAG} {FORMAT_VERSION}"),
        )
        write_npz(path, arrays)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {FORMAT_TAG} {FORMAT_VERSION} {log._meta_json()}\n")
        fh.write(",".join(log.columns()) + "\n")
        np.savetxt(fh, log.as_array(), fmt="%.17g", delimiter=",")


def load(path: str | os.PathLike) -> MotionLog:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["metadata"]))
            blocks = {name: data[name] for name in RESPONSE_BLOCKS + TORQUE_BLOCKS if name in data.files}
            t = data["t"]
    else:
        with open(path) as fh:
            first = fh.readline()
            header = fh.readline().strip().split(",")
            if not first.startswith(f"# {FORMAT_TAG}"):
                raise LogFormatError(f"{path}: missing '{FORMAT_TAG}' first line")
            meta = json.loads(first.split(" ", 3)[3])
            raw = np.loadtxt(fh, delimiter=",", ndmin=2)
        n_blocks = (len(header) - 1) // N_JOINTS
        if header[0] != "t" or n_blocks not in (6, 8) or raw.shape[1] != len(header):
            raise LogFormatError(f"{path}: unexpected column layout ({len(header)} columns)")
        t = raw[:, 0]
        names = RESPONSE_BLOCKS + (TORQUE_BLOCKS if n_blocks == 8 else ())
        blocks = {
            name: raw[:, 1 + i * N_JOINTS : 1 + (i + 1) * N_JOINTS] for i, name in enumerate(names)
        }
    rate = float(meta.pop("rate", CONTROL_RATE))
    return MotionLog(t=t, rate=rate, metadata=meta, **blocks)


def filtfilt_first_order(x: np.ndarray, cutoff: float, dt: float) -> np.ndarray:
    """Forward-backward first-order low-pass along axis 0.

    Each pass starts in steady state at its first sample, which is the same
    as padding with the held end values.
    """
    b, a = FilterState(np.array([cutoff]), dt).coefficients()
    b, a = b[0, :1], a[0]
    zi = lfilter_zi(b, a)
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return x.copy()
    fwd, _ = lfilter(b, a, x, axis=0, zi=np.multiply.outer(zi, x[0]))
    rev = fwd[::-1]
    bwd, _ = lfilter(b, a, rev, axis=0, zi=np.multiply.outer(zi, rev[0]))
    return bwd[::-1]


def two_pass_gain(freq: float, cutoff: float, dt: float) -> float:
    """Magnitude response of the forward-backward filter at ``freq`` rad/s."""
    b, a = FilterState(np.array([cutoff]), dt).coefficients()
    z = np.exp(-1j * freq * dt)
    h = b[0, 0] / (1.0 + a[0, 1] * z)
    return float(abs(h) ** 2)


def zero_phase_filter(log: MotionLog, cutoffs) -> MotionLog:
    """Zero-phase low-pass of every angle, velocity and reaction-torque column.

    ``cutoffs`` holds one rad/s value per joint (the robot's f_C). Torque
    reference columns are left as recorded.
    """
    if len(log) == 0:
        raise LogFormatError("cannot filter an empty log")
    cutoffs = np.broadcast_to(np.asarray(cutoffs, dtype=float), (N_JOINTS,))
    dt = 1.0 / log.rate
    out = {}
    for name in RESPONSE_BLOCKS:
        data = getattr(log, name)
        filtered = np.empty_like(data)
        for fc in np.unique(cutoffs):
            cols = np.flatnonzero(cutoffs == fc)
            filtered[:, cols] = filtfilt_first_order(data[:, cols], fc, dt)
        out[name] = filtered
    meta = dict(log.metadata, zero_phase=True)
    return replace(log, metadata=meta, **out)


def double_speed(log: MotionLog) -> MotionLog:
    """Keep every other row and double the velocities; plays back in half the time."""
    if len(log) < 2:
        raise LogFormatError("double_speed needs at least two rows")
    kept = {name: getattr(log, name)[::2] for name in log.blocks()}
    kept["omega_l"] = kept["omega_l"] * 2.0
    kept["omega_f"] = kept["omega_f"] * 2.0
    n = len(kept["theta_l"])
    meta = dict(log.metadata, speedup=log.metadata.get("speedup", 1) * 2)
    return replace(log, t=_grid(n, log.rate), metadata=meta, **kept)


def summary(log: MotionLog) -> dict:
    info = {
        "rows": len(log),
        "rate": log.rate,
        "duration": log.duration,
        "torque_reference": log.has_torque_reference,
        "metadata": log.metadata,
        "max_sync_error": float(np.max(np.abs(log.theta_l - log.theta_f))) if len(log) else 0.0,
    }
    return info
