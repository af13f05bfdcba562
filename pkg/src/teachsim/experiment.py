"""Experiment configuration files and reproducible run manifests.

An experiment file is INI with an ``[experiment]`` section naming the two
robots plus optional ``[operator]`` and ``[contact]`` sections::

    [experiment]
    leader = sciurus17
    follower = foodly-typer
    duration = 6.0
    seed = 0

    [operator]
    kind = reach
    goal = 0.5 -0.2 0 0 ...   (19 values, or "joint:angle" pairs with 1-based joints)
    t_start = 0.5
    t_end = 3.0

    [contact]
    joints = 1
    engagement = 0.3
    stiffness = 50

Robot entries are preset names or paths to robot ``.conf`` files, resolved
through ``TEACHSIM_CONFIG_PATH``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bilateral import OperatorModel
from .params import N_JOINTS, ConfigError, RobotParams, load_robot_params, resolve_config_path
from .plant import ContactModel
from .sysid import excitation_reference


@dataclass(frozen=True)
class OperatorSpec:
    kind: str = "reach"
    start: tuple = (0.0,) * N_JOINTS
    goal: tuple = (0.0,) * N_JOINTS
    t_start: float = 0.5
    t_end: float = 3.0
    bandwidth: float = 5.0
    damping_ratio: float = 0.9
    joints: tuple = ()
    amplitude: float = 0.5
    n_sines: int = 4


@dataclass(frozen=True)
class ContactSpec:
    joints: tuple = ()
    engagement: float = 0.0
    stiffness: float = 50.0
    damping: float = 0.5
    direction: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    leader: str = "sciurus17"
    follower: str = "foodly-typer"
    duration: float = 6.0
    seed: int = 0
    mismatch: float = 0.0
    sensor_noise: float = 0.0
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    contact: ContactSpec = field(default_factory=ContactSpec)
    source_text: str = ""

    def leader_params(self) -> RobotParams:
        return load_robot_params(self.leader)

    def follower_params(self) -> RobotParams:
        return load_robot_params(self.follower)

    def build_operator(self, leader: RobotParams, follower: RobotParams) -> OperatorModel:
        op = self.operator
        K, B = OperatorModel.gains_for(leader, follower, op.bandwidth, op.damping_ratio)
        if op.kind == "reach":
            return OperatorModel.reach(np.array(op.start), np.array(op.goal), op.t_start, op.t_end, K, B)
        if op.kind == "excitation":
            times, angles = excitation_reference(
                np.array(op.joints, dtype=int), self.duration, self.seed, op.amplitude, op.n_sines
            )
            return OperatorModel(times, angles, K, B)
        return OperatorModel(np.array([0.0]), np.array([op.start]), K, B)

    def build_contact(self) -> ContactModel:
        c = self.contact
        if not c.joints:
            return ContactModel.none()
        return ContactModel.at_joints(np.array(c.joints, dtype=int), c.engagement, c.stiffness, c.damping, c.direction)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("source_text")
        return out


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from None


def _joint_vector(text: str, name: str) -> tuple:
    """19 values, a single broadcast value, or ``joint:angle`` pairs (1-based)."""
    if ":" in text:
        out = [0.0] * N_JOINTS
        for item in text.replace(",", " ").split():
            j, _, v = item.partition(":")
            try:
                idx, val = int(j) - 1, float(v)
            except ValueError:
                raise ConfigError(f"{name}: bad entry {item!r}") from None
            if not 0 <= idx < N_JOINTS:
                raise ConfigError(f"{name}: joint {j} out of range 1..{N_JOINTS}")
            out[idx] = val
        return tuple(out)
    vals = _floats(text, name)
    if len(vals) == 1:
        return tuple(vals * N_JOINTS)
    if len(vals) != N_JOINTS:
        raise ConfigError(f"{name}: expected 1 or {N_JOINTS} values, got {len(vals)}")
    return tuple(vals)


def _joint_list(text: str, name: str) -> tuple:
    try:
        joints = tuple(int(v) - 1 for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{name}: expected 1-based joint numbers") from None
    if any(not 0 <= j < N_JOINTS for j in joints):
        raise ConfigError(f"{name}: joint numbers must be within 1..{N_JOINTS}")
    return joints


def loads_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")
    try:
        ex = cp["experiment"]
        kwargs = {
            "leader": ex.get("leader", "sciurus17"),
            "follower": ex.get("follower", "foodly-typer"),
            "duration": ex.getfloat("duration", 6.0),
            "seed": ex.getint("seed", 0),
            "mismatch": ex.getfloat("mismatch", 0.0),
            "sensor_noise": ex.getfloat("sensor_noise", 0.0),
        }
        if cp.has_section("operator"):
            op = cp["operator"]
            kind = op.get("kind", "reach")
            if kind not in ("reach", "excitation", "hold"):
                raise ConfigError(f"{source}: operator kind must be reach, excitation or hold")
            kwargs["operator"] = OperatorSpec(
                kind=kind,
                start=_joint_vector(op.get("start", "0"), "operator.start"),
                goal=_joint_vector(op.get("goal", "0"), "operator.goal"),
                t_start=op.getfloat("t_start", 0.5),
                t_end=op.getfloat("t_end", 3.0),
                bandwidth=op.getfloat("bandwidth", 5.0),
                damping_ratio=op.getfloat("damping_ratio", 0.9),
                joints=_joint_list(op.get("joints", ""), "operator.joints"),
                amplitude=op.getfloat("amplitude", 0.5),
                n_sines=op.getint("n_sines", 4),
            )
        if cp.has_section("contact"):
            c = cp["contact"]
            kwargs["contact"] = ContactSpec(
                joints=_joint_list(c.get("joints", ""), "contact.joints"),
                engagement=c.getfloat("engagement", 0.0),
                stiffness=c.getfloat("stiffness", 50.0),
                damping=c.getfloat("damping", 0.5),
                direction=c.getfloat("direction", 1.0),
            )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = ExperimentConfig(source_text=text, **kwargs)
    if cfg.duration <= 0:
        raise ConfigError(f"{source}: duration must be positive")
    if cfg.operator.kind == "reach" and not cfg.operator.t_end > cfg.operator.t_start >= 0:
        raise ConfigError(f"{source}: operator needs 0 <= t_start < t_end")
    if cfg.operator.kind == "excitation" and not cfg.operator.joints:
        raise ConfigError(f"{source}: excitation operator needs joints")
    # fail early on unknown robots
    cfg.leader_params()
    cfg.follower_params()
    return cfg


def load_trajectory(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Operator reference from CSV rows ``t, angle_1..angle_19`` (rad); a header row is allowed."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if lines:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]  # header row
    try:
        data = np.loadtxt(lines, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.shape[0] == 0 or data.shape[1] != N_JOINTS + 1:
        raise ConfigError(f"{path}: expected rows of time plus {N_JOINTS} angles")
    times, angles = data[:, 0], data[:, 1:]
    if not np.all(np.isfinite(data)) or np.any(np.diff(times) <= 0):
        raise ConfigError(f"{path}: times must be finite and strictly increasing")
    return times, angles


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    resolved = resolve_config_path(path, suffix=".ini")
    return loads_config(resolved.read_text(), str(resolved))


def file_digest(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    return {
        "teachsim": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_json(path: str | os.PathLike, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir: str | os.PathLike, command: str, settings: dict, seed: int, config=None) -> dict:
    """Record what produced ``out_dir``: command, settings, seed, versions and artifact hashes.

    Paths to the output directory are never recorded, so two runs of the
    same inputs into different directories produce identical manifests.
    """
    out_dir = Path(out_dir)
    artifacts = {
        p.relative_to(out_dir).as_posix(): file_digest(p)
        for p in sorted(out_dir.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "command": command,
        "settings": settings,
        "seed": seed,
        "config": None if config is None else {"sha256": config.digest(), "values": config.as_dict()},
        "versions": versions(),
        "artifacts": artifacts,
    }
    write_json(out_dir / "manifest.json", manifest)
    return manifest
