"""Robot parameter sets and the key-value config format.

A robot config is an INI file with three sections::

    [robot]
    name = foodly-typer

    [joints]            # 19 comma-separated values each, joint 1 first
    kp = ...
    kd = ...
    kf = ...
    inertia = ...       # kg m^2
    viscous = ...       # N m s
    cutoff = ...        # rad/s

    [gravity]           # link masses (kg), CoM distances and lengths (m)
    m2 = ...  m3 = ...  m4 = ...
    c2 = ...  c3 = ...  c4 = ...
    l2 = ...  l3 = ...
    g = 9.80665

An optional ``[gravity.lumped]`` section with ``p1``, ``p2``, ``p3`` overrides
the raw link constants; this is what ``identify`` writes.

Two presets ship with the package: ``sciurus17`` (leader) and
``foodly-typer`` (follower). ``TEACHSIM_CONFIG_PATH`` (os.pathsep separated
directories) is searched before the presets when a config is named rather
than given as a path.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import logging
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

N_JOINTS = 19
RIGHT_ARM = np.arange(0, 8)
LEFT_ARM = np.arange(8, 16)
TORSO = np.arange(16, 19)
GRIPPERS = np.array([7, 15])

CONTROL_RATE = 500.0
CONTROL_DT = 1.0 / CONTROL_RATE
STANDARD_GRAVITY = 9.80665

PRESETS = ("sciurus17", "foodly-typer")
CONFIG_PATH_ENV = "TEACHSIM_CONFIG_PATH"

_JOINT_FIELDS = ("kp", "kd", "kf", "inertia", "viscous", "cutoff")

log = logging.getLogger(__name__)
_flagged: set = set()


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration files."""


@dataclass(frozen=True)
class GravityParams:
    """Link constants of the shoulder-to-elbow chain (joints 1-4 / 9-12)."""

    m2: float
    m3: float
    m4: float
    c2: float
    c3: float
    c4: float
    l2: float
    l3: float
    g: float = STANDARD_GRAVITY

    def __post_init__(self):
        for name in ("m2", "m3", "m4", "c2", "c3", "c4", "l2", "l3", "g"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"gravity parameter {name} must be > 0, got {value}")

    def anomalies(self) -> list[str]:
        """Physically suspicious values, kept as given but reported.

        The shipped tables list centre-of-mass distances numerically equal to
        the link masses and a forearm CoM beyond the end of the arm.
        """
        notes = []
        for i in (2, 3, 4):
            c, m = getattr(self, f"c{i}"), getattr(self, f"m{i}")
            if c == m:
                notes.append(f"c{i} = {c} m equals m{i} = {m} kg")
        if self.c4 > self.l2 + self.l3:
            notes.append(f"c4 = {self.c4} m exceeds l2 + l3 = {self.l2 + self.l3:.4f} m")
        return notes

    def lumped(self) -> LumpedGravity:
        return LumpedGravity(
            p1=self.c2 * self.m2 + (self.c3 + self.l2) * self.m3,
            p2=self.c4 * self.m4,
            p3=(self.l2 + self.l3) * self.m4,
            g=self.g,
        )


@dataclass(frozen=True)
class LumpedGravity:
    """The three mass-length products the gravity vector is linear in.

    p1 = c2*m2 + (c3 + l2)*m3, p2 = c4*m4, p3 = (l2 + l3)*m4.
    """

    p1: float
    p2: float
    p3: float
    g: float = STANDARD_GRAVITY

    def lumped(self) -> LumpedGravity:
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])


def _joint_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(N_JOINTS, float(arr))
    if arr.shape != (N_JOINTS,):
        raise ConfigError(f"{name} needs {N_JOINTS} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RobotParams:
    """Per-joint hardware model and controller gains for one robot."""

    inertia: np.ndarray
    viscous: np.ndarray
    cutoff: np.ndarray
    kp: np.ndarray
    kd: np.ndarray
    kf: np.ndarray
    gravity: GravityParams | LumpedGravity
    name: str = "custom"

    def __post_init__(self):
        for fname in _JOINT_FIELDS:
            object.__setattr__(self, fname, _joint_array(getattr(self, fname), fname))
        if np.any(self.inertia <= 0):
            raise ConfigError("inertia must be > 0 for every joint")
        if np.any(self.viscous < 0):
            raise ConfigError("viscous friction must be >= 0")
        if np.any(self.cutoff <= 0):
            raise ConfigError("cutoff frequencies must be > 0")
        for fname in ("kp", "kd", "kf"):
            if np.any(getattr(self, fname) < 0):
                raise ConfigError(f"{fname} gains must be >= 0")

    def with_updates(self, **changes) -> RobotParams:
        return replace(self, **changes)

    def perturbed(self, fraction: float, rng: np.random.Generator) -> RobotParams:
        """Scale J and D by independent factors drawn from 1 +/- fraction.

        Used to build a ground-truth plant that differs from the nominal
        model the controller and observers use.
        """
        if fraction == 0:
            return self
        j_scale = 1.0 + fraction * rng.uniform(-1.0, 1.0, N_JOINTS)
        d_scale = 1.0 + fraction * rng.uniform(-1.0, 1.0, N_JOINTS)
        return replace(self, inertia=self.inertia * j_scale, viscous=self.viscous * d_scale)

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps_robot_params(self).encode()).hexdigest()[:16]


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_robot_params(params: RobotParams) -> str:
    cp = configparser.ConfigParser()
    cp["robot"] = {"name": params.name}
    cp["joints"] = {f: ", ".join(_fmt(v) for v in getattr(params, f)) for f in _JOINT_FIELDS}
    grav = params.gravity
    if isinstance(grav, GravityParams):
        cp["gravity"] = {
            k: _fmt(getattr(grav, k)) for k in ("m2", "m3", "m4", "c2", "c3", "c4", "l2", "l3", "g")
        }
    else:
        cp["gravity"] = {"g": _fmt(grav.g)}
        cp["gravity.lumped"] = {k: _fmt(getattr(grav, k)) for k in ("p1", "p2", "p3")}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save_robot_params(params: RobotParams, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_robot_params(params))


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace("\n", " ").replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad number list for {name}: {exc}") from None


def loads_robot_params(text: str, source: str = "<string>") -> RobotParams:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if "joints" not in cp or "gravity" not in cp:
        raise ConfigError(f"{source}: robot config needs [joints] and [gravity] sections")
    joints = cp["joints"]
    values = {}
    for fname in _JOINT_FIELDS:
        if fname not in joints:
            raise ConfigError(f"{source}: [joints] is missing '{fname}'")
        values[fname] = _parse_floats(joints[fname], fname)
    gsec = cp["gravity"]
    g = float(gsec.get("g", STANDARD_GRAVITY))
    try:
        if "gravity.lumped" in cp:
            lsec = cp["gravity.lumped"]
            gravity = LumpedGravity(float(lsec["p1"]), float(lsec["p2"]), float(lsec["p3"]), g)
        else:
            gravity = GravityParams(
                **{k: float(gsec[k]) for k in ("m2", "m3", "m4", "c2", "c3", "c4", "l2", "l3")}, g=g
            )
    except KeyError as exc:
        raise ConfigError(f"{source}: [gravity] is missing {exc}") from None
    name = cp["robot"].get("name", "custom") if "robot" in cp else "custom"
    if isinstance(gravity, GravityParams) and source not in _flagged:
        _flagged.add(source)
        notes = gravity.anomalies()
        if notes:
            log.warning("%s: suspicious gravity constants, used as given: %s", source, "; ".join(notes))
    return RobotParams(gravity=gravity, name=name, **values)


def resolve_config_path(name: str | os.PathLike, suffix: str = ".conf") -> Path:
    """Find a config given a path, a file name on the search path, or a preset."""
    path = Path(name)
    if path.is_file():
        return path
    search = [Path(p) for p in os.environ.get(CONFIG_PATH_ENV, "").split(os.pathsep) if p]
    for directory in search:
        for candidate in (directory / path, directory / f"{path}{suffix}"):
            if candidate.is_file():
                return candidate
    preset = resources.files("teachsim") / "presets" / f"{path.name}{suffix}"
    if str(name) in PRESETS and preset.is_file():
        return Path(str(preset))
    raise ConfigError(f"config not found: {name}")


def load_robot_params(name: str | os.PathLike) -> RobotParams:
    path = resolve_config_path(name)
    return loads_robot_params(path.read_text(), source=str(path))


def preset(name: str) -> RobotParams:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return load_robot_params(name)
