"""Ground-truth manipulator: diagonal-inertia joint dynamics with analytic gravity.

Each joint obeys ``J theta'' = tau_ref - tau_res - D theta' - g(theta)`` where
``g`` is nonzero only on the shoulder/elbow joints of each arm (1-4 and
9-12, 1-based). Joint indices in this API are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import CONTROL_DT, N_JOINTS, GravityParams, LumpedGravity, RobotParams

GRAVITY_JOINTS = np.array([0, 1, 2, 3, 8, 9, 10, 11])


class NumericalError(RuntimeError):
    """A simulation produced or received non-finite values."""


def gravity_regressor(theta: np.ndarray, g: float) -> np.ndarray:
    """Coefficients of (p1, p2, p3) in the gravity torque of joints 1-4, 9-12.

    Returns an array of shape ``theta.shape[:-1] + (8, 3)``; row order follows
    ``GRAVITY_JOINTS``. ``gravity_torque`` is this matrix times the lumped
    parameter vector.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta[..., GRAVITY_JOINTS])
    c = np.cos(theta[..., GRAVITY_JOINTS])
    s1, s2, s3, s4, s9, s10, s11, s12 = np.moveaxis(s, -1, 0)
    c1, c2, c3, c4, c9, c10, c11, c12 = np.moveaxis(c, -1, 0)
    zero = np.zeros_like(s1)

    rows = [
        # right arm
        (-s1 * s2, -s4 * c1 * c3 - s3 * s4 * c2 * s1 + c4 * s2 * s1, -s2 * s1),
        (c2 * c1, (-s2 * s3 * s4 - c4 * c2) * c1, c2 * c1),
        (zero, (s1 * s3 + c1 * c2 * c3) * s4, zero),
        (zero, (s2 * s4 + s3 * c2 * c4) * c1 - s1 * c3 * c4, zero),
        # left arm
        (s9 * s10, -s12 * c11 * c9 - s11 * s12 * c10 * s9 - c12 * s10 * s9, s10 * s9),
        (-c10 * c9, -(s11 * s12 * s10 - c12 * c10) * c9, -c10 * c9),
        (zero, (s11 * s9 + c11 * c9 * c10) * s12, zero),
        (zero, (s11 * c12 * c10 - s12 * s10) * c9 - s9 * c11 * c12, zero),
    ]
    out = np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
    return g * out


def _gravity_single(theta: np.ndarray, lp: LumpedGravity) -> np.ndarray:
    # scalar path for the control loop; same terms as gravity_regressor
    p1, p2, p3, g = lp.p1, lp.p2, lp.p3, lp.g
    s1, s2, s3, s4 = (math.sin(x) for x in theta[0:4])
    c1, c2, c3, c4 = (math.cos(x) for x in theta[0:4])
    s9, s10, s11, s12 = (math.sin(x) for x in theta[8:12])
    c9, c10, c11, c12 = (math.cos(x) for x in theta[8:12])
    out = np.zeros(theta.shape)
    out[0] = g * (-p1 * s1 * s2 + p2 * (-s4 * c1 * c3 - s3 * s4 * c2 * s1 + c4 * s2 * s1) - p3 * s2 * s1)
    out[1] = g * (p1 * c2 + p2 * (-s2 * s3 * s4 - c4 * c2) + p3 * c2) * c1
    out[2] = g * p2 * (s1 * s3 + c1 * c2 * c3) * s4
    out[3] = g * p2 * ((s2 * s4 + s3 * c2 * c4) * c1 - s1 * c3 * c4)
    out[8] = g * (p1 * s9 * s10 + p2 * (-s12 * c11 * c9 - s11 * s12 * c10 * s9 - c12 * s10 * s9) + p3 * s10 * s9)
    out[9] = -g * (p1 * c10 + p2 * (s11 * s12 * s10 - c12 * c10) + p3 * c10) * c9
    out[10] = g * p2 * (s11 * s9 + c11 * c9 * c10) * s12
    out[11] = g * p2 * ((s11 * c12 * c10 - s12 * s10) * c9 - s9 * c11 * c12)
    return out


def gravity_torque(theta: np.ndarray, params: GravityParams | LumpedGravity) -> np.ndarray:
    """Gravity vector for one or many poses (leading batch dims allowed)."""
    theta = np.asarray(theta, dtype=float)
    lumped = params.lumped()
    if theta.ndim == 1:
        return _gravity_single(theta, lumped)
    out = np.zeros(theta.shape)
    out[..., GRAVITY_JOINTS] = gravity_regressor(theta, lumped.g) @ lumped.as_array()
    return out


@dataclass(frozen=True)
class PlantState:
    theta: np.ndarray
    omega: np.ndarray
    time: float = 0.0

    @classmethod
    def at_rest(cls, theta=None) -> PlantState:
        theta = np.zeros(N_JOINTS) if theta is None else np.array(theta, dtype=float)
        return cls(theta=theta, omega=np.zeros(N_JOINTS), time=0.0)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.omega)))


def plant_step(
    state: PlantState,
    tau_ref: np.ndarray,
    tau_ext: np.ndarray,
    params: RobotParams,
    dt: float = CONTROL_DT,
) -> PlantState:
    """Advance one fixed step with semi-implicit Euler.

    ``tau_ext`` is the reaction torque the environment exerts on the joints
    (subtracted, like friction and gravity).
    """
    if not (np.all(np.isfinite(tau_ref)) and np.all(np.isfinite(tau_ext))):
        raise NumericalError("non-finite torque passed to plant_step")
    if dt <= 0:
        raise ValueError("dt must be positive")
    accel = (
        tau_ref - tau_ext - params.viscous * state.omega - gravity_torque(state.theta, params.gravity)
    ) / params.inertia
    omega = state.omega + dt * accel
    theta = state.theta + dt * omega
    return PlantState(theta=theta, omega=omega, time=state.time + dt)


@dataclass(frozen=True)
class ContactModel:
    """One-sided spring-damper stops, one per joint.

    A joint is in contact when ``direction * (theta - engagement) > 0``; the
    reaction torque then pushes it back toward the free side. The damping
    part never pulls, so the torque magnitude is clipped at zero.
    """

    engagement: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    stiffness: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    damping: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    enabled: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS, dtype=bool))
    direction: np.ndarray = field(default_factory=lambda: np.ones(N_JOINTS))

    def __post_init__(self):
        for name in ("engagement", "stiffness", "damping", "direction"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (N_JOINTS,)).copy()
            object.__setattr__(self, name, arr)
        enabled = np.broadcast_to(np.asarray(self.enabled, dtype=bool), (N_JOINTS,)).copy()
        object.__setattr__(self, "enabled", enabled)
        if np.any(self.stiffness < 0) or np.any(self.damping < 0):
            raise ValueError("contact stiffness and damping must be >= 0")
        if not np.all(np.isin(self.direction, (-1.0, 1.0))):
            raise ValueError("contact direction must be +1 or -1")

    @classmethod
    def none(cls) -> ContactModel:
        return cls()

    @classmethod
    def at_joints(cls, joints, engagement, stiffness, damping=0.0, direction=1.0) -> ContactModel:
        joints = np.atleast_1d(np.asarray(joints, dtype=int))
        model = {k: np.zeros(N_JOINTS) for k in ("engagement", "stiffness", "damping")}
        dirs = np.ones(N_JOINTS)
        enabled = np.zeros(N_JOINTS, dtype=bool)
        model["engagement"][joints] = engagement
        model["stiffness"][joints] = stiffness
        model["damping"][joints] = damping
        dirs[joints] = direction
        enabled[joints] = True
        return cls(direction=dirs, enabled=enabled, **model)

    def shifted(self, offset) -> ContactModel:
        """Move every engagement angle by ``offset`` rad (scalar or per joint)."""
        return ContactModel(
            engagement=self.engagement + offset,
            stiffness=self.stiffness,
            damping=self.damping,
            enabled=self.enabled,
            direction=self.direction,
        )


def contact_torque(state: PlantState, model: ContactModel) -> np.ndarray:
    penetration = model.direction * (state.theta - model.engagement)
    magnitude = model.stiffness * penetration + model.damping * model.direction * state.omega
    active = model.enabled & (penetration > 0)
    return np.where(active, model.direction * np.maximum(magnitude, 0.0), 0.0)
