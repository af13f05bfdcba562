"""Motion-copying playback: a recorded leader response drives the follower.

The follower runs the same law as in bilateral teleoperation, with the
leader side frozen to the recording, so contact behaviour is reproduced by
hybrid position/force control rather than by position alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bilateral import Response, Robot, follower_law
from .motionlog import MotionLog, double_speed, zero_phase_filter
from .params import CONTROL_RATE, N_JOINTS
from .plant import ContactModel, NumericalError, contact_torque


@dataclass(frozen=True)
class ReplayCommand:
    """Per-tick follower commands: the recorded leader angle, velocity and reaction torque."""

    theta: np.ndarray
    omega: np.ndarray
    tau_res: np.ndarray
    rate: float = CONTROL_RATE

    def __len__(self) -> int:
        return len(self.theta)

    def at(self, k: int) -> Response:
        k = min(k, len(self) - 1)
        return Response(self.theta[k], self.omega[k], self.tau_res[k])

    def as_array(self) -> np.ndarray:
        return np.hstack([self.theta, self.omega, self.tau_res])

    @classmethod
    def from_log(cls, log: MotionLog) -> ReplayCommand:
        return cls(log.theta_l.copy(), log.omega_l.copy(), log.tau_l.copy(), log.rate)


def prepare_replay(log: MotionLog, speedup: int = 1, filter: bool = False, cutoffs=None) -> ReplayCommand:
    """Optionally zero-phase filter, then optionally double the speed, then take leader columns."""
    if speedup not in (1, 2):
        raise ValueError("speedup must be 1 or 2")
    if filter:
        if cutoffs is None:
            raise ValueError("filtering needs the per-joint cutoff frequencies")
        log = zero_phase_filter(log, cutoffs)
    if speedup == 2:
        log = double_speed(log)
    return ReplayCommand.from_log(log)


def reset_ramp(start: np.ndarray, goal: np.ndarray, seconds: float, rate: float = CONTROL_RATE) -> ReplayCommand:
    """Position-only cosine ramp used between repeated playbacks."""
    n = max(int(round(seconds * rate)), 1)
    s = np.arange(1, n + 1) / n
    shape = 0.5 - 0.5 * np.cos(np.pi * s)
    dshape = 0.5 * np.pi * np.sin(np.pi * s) * rate / n
    delta = goal - start
    return ReplayCommand(
        theta=start + np.outer(shape, delta),
        omega=np.outer(dshape, delta),
        tau_res=np.zeros((n, N_JOINTS)),
        rate=rate,
    )


def concat(commands: list[ReplayCommand]) -> ReplayCommand:
    return ReplayCommand(
        theta=np.vstack([c.theta for c in commands]),
        omega=np.vstack([c.omega for c in commands]),
        tau_res=np.vstack([c.tau_res for c in commands]),
        rate=commands[0].rate,
    )


def run_motion_copy(
    commands: ReplayCommand,
    follower: Robot,
    contact: ContactModel,
    hold_ticks: int = 0,
    sensor_noise: float = 0.0,
    seed: int = 0,
    metadata: dict | None = None,
) -> MotionLog:
    """Play ``commands`` on ``follower`` at 500 Hz.

    After the stream ends the last command is held for ``hold_ticks`` more
    ticks. The returned log carries the commands in the leader columns and
    the follower response in the follower columns.
    """
    if len(commands) == 0:
        raise ValueError("empty command stream")
    n = len(commands) + hold_ticks
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    out = {k: np.empty((n, N_JOINTS)) for k in ("theta_f", "omega_f", "tau_f", "tref_f")}
    idx = np.minimum(np.arange(n), len(commands) - 1)
    for k in range(n):
        noise = rng.normal(0.0, sensor_noise, N_JOINTS) if sensor_noise > 0 else None
        own, tau_dis = follower.sense(noise)
        tau = follower_law(commands.at(k), own, tau_dis, follower.params)
        out["theta_f"][k], out["omega_f"][k], out["tau_f"][k], out["tref_f"][k] = (
            own.theta,
            own.omega,
            own.tau_res,
            tau,
        )
        try:
            follower.actuate(tau, contact_torque(follower.state, contact))
        except NumericalError as exc:
            raise NumericalError(f"motion copy diverged at tick {k}: {exc}") from None
    meta = {"kind": "mocopy", "follower": follower.params.name, "seed": seed}
    meta.update(metadata or {})
    return MotionLog(
        t=np.arange(n) / commands.rate,
        theta_l=commands.theta[idx],
        omega_l=commands.omega[idx],
        tau_l=commands.tau_res[idx],
        tref_l=np.zeros((n, N_JOINTS)),
        rate=commands.rate,
        metadata=meta,
        **out,
    )


def repeat_commands(commands: ReplayCommand, repeat: int, reset_seconds: float) -> ReplayCommand:
    """Chain ``repeat`` playbacks with a reset ramp back to the start pose in between."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    parts = [commands]
    for _ in range(repeat - 1):
        if reset_seconds > 0:
            parts.append(reset_ramp(commands.theta[-1], commands.theta[0], reset_seconds, commands.rate))
        parts.append(commands)
    return concat(parts)


def tracking_rms(replay: MotionLog, reference: MotionLog) -> np.ndarray:
    """Per-joint RMS difference of follower angles over the common length."""
    n = min(len(replay), len(reference))
    return np.sqrt(np.mean((replay.theta_f[:n] - reference.theta_f[:n]) ** 2, axis=0))
