"""Low-pass filter, pseudo-differentiator, DOB and RFOB.

All blocks are vectorised over the 19 joints and share the per-joint cutoff
``f_C``. Discretisation is backward Euler by default (unconditionally stable
at 500 Hz); ``method="tustin"`` switches to the bilinear transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import CONTROL_DT, RobotParams
from .plant import gravity_torque

METHODS = ("backward", "tustin")


@dataclass
class FilterState:
    """First-order low-pass ``f_C / (s + f_C)`` per channel."""

    cutoff: np.ndarray
    dt: float = CONTROL_DT
    method: str = "backward"
    y: np.ndarray | None = None
    x_prev: np.ndarray | None = None

    def __post_init__(self):
        self.cutoff = np.asarray(self.cutoff, dtype=float)
        if np.any(self.cutoff <= 0) or self.dt <= 0:
            raise ValueError("cutoff and dt must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        wdt = self.cutoff * self.dt
        if self.method == "backward":
            self._a = 1.0 / (1.0 + wdt)
            self._b = wdt / (1.0 + wdt)
        else:
            self._a = (2.0 - wdt) / (2.0 + wdt)
            self._b = wdt / (2.0 + wdt)

    def reset(self, value) -> None:
        """Put the filter in steady state at ``value``."""
        value = np.broadcast_to(np.asarray(value, dtype=float), self.cutoff.shape)
        self.y = value.copy()
        self.x_prev = value.copy()

    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(b, a) transfer-function coefficients per channel, ``lfilter`` style."""
        if self.method == "backward":
            return np.stack([self._b, 0 * self._b], -1), np.stack([np.ones_like(self._a), -self._a], -1)
        return np.stack([self._b, self._b], -1), np.stack([np.ones_like(self._a), -self._a], -1)


def low_pass(state: FilterState, x) -> np.ndarray:
    """Advance the filter by one sample and return its output.

    A fresh (never reset) state starts from zero.
    """
    x = np.asarray(x, dtype=float)
    if state.y is None:
        state.reset(0.0)
    if state.method == "backward":
        state.y = state._a * state.y + state._b * x
    else:
        state.y = state._a * state.y + state._b * (x + state.x_prev)
    state.x_prev = x
    return state.y


@dataclass
class PseudoDiffState:
    """Band-limited differentiator ``s f_C / (s + f_C)`` realised as f_C (x - LPF(x))."""

    lpf: FilterState

    @classmethod
    def create(cls, cutoff, dt: float = CONTROL_DT, method: str = "backward") -> PseudoDiffState:
        return cls(FilterState(cutoff, dt, method))

    def reset(self, theta) -> None:
        self.lpf.reset(theta)


def pseudo_diff(state: PseudoDiffState, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if state.lpf.y is None:
        state.lpf.reset(theta)
    return state.lpf.cutoff * (theta - low_pass(state.lpf, theta))


@dataclass
class ObserverState:
    """Observer blocks for one robot.

    ``tau_dis`` is gravity compensation plus the DOB output; ``tau_res`` is
    the RFOB estimate of the external (reaction) torque.
    """

    dob: FilterState
    rfob: FilterState
    velocity: PseudoDiffState
    tau_dis: np.ndarray = field(default=None)
    tau_res: np.ndarray = field(default=None)

    @classmethod
    def create(cls, params: RobotParams, dt: float = CONTROL_DT, method: str = "backward") -> ObserverState:
        obs = cls(
            dob=FilterState(params.cutoff, dt, method),
            rfob=FilterState(params.cutoff, dt, method),
            velocity=PseudoDiffState.create(params.cutoff, dt, method),
        )
        obs.reset(np.zeros_like(params.cutoff), params)
        return obs

    def reset(self, theta, params: RobotParams) -> None:
        """Steady state at rest at ``theta`` with no external torque."""
        self.velocity.reset(theta)
        self.dob.reset(0.0)
        self.rfob.reset(0.0)
        self.tau_dis = gravity_torque(theta, params.gravity)
        self.tau_res = np.zeros_like(self.tau_dis)


def dob_update(obs: ObserverState, tau_ref, omega, theta, params: RobotParams, g_model=None) -> np.ndarray:
    """Gravity compensation plus disturbance-observer estimate.

    The DOB sees the acceleration-control part of the command (the torque
    reference minus the gravity feed-forward), so at rest with an exact model
    its output is the external disturbance alone.
    """
    if g_model is None:
        g_model = gravity_torque(theta, params.gravity)
    fj = params.cutoff * params.inertia * omega
    obs.tau_dis = g_model + low_pass(obs.dob, tau_ref - g_model + fj) - fj
    return obs.tau_dis


def rfob_update(obs: ObserverState, tau_ref, omega, theta, params: RobotParams, g_model=None) -> np.ndarray:
    """Reaction-force estimate: DOB structure with modelled friction and gravity removed."""
    if g_model is None:
        g_model = gravity_torque(theta, params.gravity)
    fj = params.cutoff * params.inertia * omega
    obs.tau_res = low_pass(obs.rfob, tau_ref - params.viscous * omega - g_model + fj) - fj
    return obs.tau_res


def observe(obs: ObserverState, tau_ref, theta, params: RobotParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One control tick of sensing: velocity, then DOB and RFOB.

    ``tau_ref`` is the command applied over the previous tick. Returns
    ``(omega, tau_dis, tau_res)``.
    """
    omega = pseudo_diff(obs.velocity, theta)
    g_model = gravity_torque(theta, params.gravity)
    tau_dis = dob_update(obs, tau_ref, omega, theta, params, g_model)
    tau_res = rfob_update(obs, tau_ref, omega, theta, params, g_model)
    return omega, tau_dis, tau_res
