"""Dual-rate closed loop: 500 Hz follower control, 50 Hz policy updates."""

from __future__ import annotations

import numpy as np

from ..bilateral import Response, Robot, follower_law
from ..motionlog import MotionLog
from ..params import CONTROL_RATE, N_JOINTS
from ..plant import ContactModel, NumericalError, contact_torque
from .dataset import STRIDE, Normalization, arm_state
from .network import LSTMPolicy, NetworkParams
from .selection import ObjectScene, select_target


class NoTargetError(ValueError):
    """The scene has no eligible object to reach for."""


def policy_forward(net: NetworkParams, x: np.ndarray, coords: np.ndarray, hidden=None):
    """One recurrent step on normalized inputs; returns ``(output, hidden)``."""
    policy = LSTMPolicy(net)
    policy.state = hidden
    y = policy.step(np.asarray(x, dtype=float), np.asarray(coords, dtype=float))
    return y, policy.state


def resolve_target(target) -> np.ndarray:
    """Object coordinates from a scene (via selection) or an explicit (x, y)."""
    if isinstance(target, ObjectScene):
        idx = select_target(target)
        if idx is None:
            raise NoTargetError("no eligible object in the scene")
        return target.centers[idx].copy()
    return np.asarray(target, dtype=float).reshape(2)


def run_inference(
    policy,
    norm: Normalization,
    follower: Robot,
    target,
    duration: float,
    contact: ContactModel | None = None,
    hold: int = STRIDE,
    sensor_noise: float = 0.0,
    seed: int = 0,
    metadata: dict | None = None,
) -> MotionLog:
    """Drive ``follower`` with commands predicted by ``policy``.

    ``policy`` is a NetworkParams or any object with ``reset()`` and
    ``step(x, coords) -> y`` working in normalized units. Every ``hold``
    ticks the policy sees the follower's current response of the arm joints
    and returns the next leader response, which is denormalized and held as
    the command until the next update. Joints outside the arm hold their
    initial angle.

    The returned log has the commands in the leader columns.
    """
    if hold < 1:
        raise ValueError("hold must be >= 1")
    if isinstance(policy, NetworkParams):
        policy = LSTMPolicy(policy)
    policy.reset()
    xy = resolve_target(target)
    coords = norm.coords.normalize(xy)
    contact = contact or ContactModel.none()
    joints = list(norm.joints)
    nj = len(joints)
    n = int(round(duration * CONTROL_RATE))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 40]))

    cmd_theta = follower.state.theta.copy()
    cmd_omega = np.zeros(N_JOINTS)
    cmd_tau = np.zeros(N_JOINTS)
    out = {k: np.empty((n, N_JOINTS)) for k in ("theta_l", "omega_l", "tau_l", "theta_f", "omega_f", "tau_f", "tref_f")}
    for k in range(n):
        noise = rng.normal(0.0, sensor_noise, N_JOINTS) if sensor_noise > 0 else None
        own, tau_dis = follower.sense(noise)
        if k % hold == 0:
            x = norm.state.normalize(arm_state(own.theta, own.omega, own.tau_res, joints))
            y = norm.target.denormalize(policy.step(x, coords))
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"policy produced a non-finite command at tick {k}")
            cmd_theta[joints], cmd_omega[joints], cmd_tau[joints] = y[:nj], y[nj : 2 * nj], y[2 * nj :]
        command = Response(cmd_theta.copy(), cmd_omega.copy(), cmd_tau.copy())
        tau = follower_law(command, own, tau_dis, follower.params)
        out["theta_l"][k], out["omega_l"][k], out["tau_l"][k] = command.theta, command.omega, command.tau_res
        out["theta_f"][k], out["omega_f"][k], out["tau_f"][k], out["tref_f"][k] = own.theta, own.omega, own.tau_res, tau
        try:
            follower.actuate(tau, contact_torque(follower.state, contact))
        except NumericalError as exc:
            raise NumericalError(f"inference diverged at tick {k}: {exc}") from None
        if not follower.state.is_finite():
            raise NumericalError(f"follower state non-finite at tick {k}")
    meta = {"kind": "inference", "follower": follower.params.name, "target_xy": xy.tolist(), "hold": hold, "seed": seed}
    meta.update(metadata or {})
    return MotionLog(
        t=np.arange(n) / CONTROL_RATE,
        tref_l=np.zeros((n, N_JOINTS)),
        rate=CONTROL_RATE,
        metadata=meta,
        **out,
    )
