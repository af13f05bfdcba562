"""Four-channel bilateral control between a leader and a follower robot.

Both robots run acceleration control (gravity compensation plus DOB). The
torque reference of each side is

    tau = J/2 (Kp + s Kd)(theta_other - theta_self)
          - Kf/2 (tau_res_other + tau_res_self) + tau_dis_self

with the ``s Kd`` term applied to pseudo-differentiated velocities. Each
robot uses its own J, so a heterogeneous pair (Sciurus17 leader, Foodly
follower) stays dimensionally consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .motionlog import MotionLog
from .observers import ObserverState, observe
from .params import CONTROL_DT, CONTROL_RATE, N_JOINTS, RobotParams
from .plant import ContactModel, NumericalError, PlantState, contact_torque, gravity_torque, plant_step


@dataclass(frozen=True)
class Response:
    """Angle, velocity and reaction torque of one robot (or a command made of them)."""

    theta: np.ndarray
    omega: np.ndarray
    tau_res: np.ndarray


def follower_law(command: Response, own: Response, tau_dis: np.ndarray, params: RobotParams) -> np.ndarray:
    """One side of the bilateral law, tracking ``command``.

    Used for both robots in teleoperation and for the follower alone in
    motion copying and learned-policy playback.
    """
    position = params.kp * (command.theta - own.theta) + params.kd * (command.omega - own.omega)
    force = params.kf * (command.tau_res + own.tau_res)
    return 0.5 * params.inertia * position - 0.5 * force + tau_dis


def bilateral_torques(
    leader: Response,
    follower: Response,
    leader_dis: np.ndarray,
    follower_dis: np.ndarray,
    leader_params: RobotParams,
    follower_params: RobotParams,
) -> tuple[np.ndarray, np.ndarray]:
    tau_l = follower_law(follower, leader, leader_dis, leader_params)
    tau_f = follower_law(leader, follower, follower_dis, follower_params)
    return tau_l, tau_f


@dataclass
class Robot:
    """Controller-side model, ground-truth plant and observer state of one robot."""

    params: RobotParams
    plant_params: RobotParams
    state: PlantState
    observer: ObserverState
    tau_ref: np.ndarray

    @classmethod
    def create(cls, params: RobotParams, theta0=None, plant_params: RobotParams | None = None) -> Robot:
        state = PlantState.at_rest(theta0)
        observer = ObserverState.create(params)
        observer.reset(state.theta, params)
        plant_params = params if plant_params is None else plant_params
        # start in static equilibrium: the previous command held the pose
        tau_ref = gravity_torque(state.theta, plant_params.gravity)
        return cls(params, plant_params, state, observer, tau_ref)

    def sense(self, noise: np.ndarray | None = None) -> tuple[Response, np.ndarray]:
        theta = self.state.theta if noise is None else self.state.theta + noise
        omega, tau_dis, tau_res = observe(self.observer, self.tau_ref, theta, self.params)
        return Response(theta, omega, tau_res), tau_dis

    def actuate(self, tau_ref: np.ndarray, tau_ext: np.ndarray, dt: float = CONTROL_DT) -> None:
        self.tau_ref = tau_ref
        self.state = plant_step(self.state, tau_ref, tau_ext, self.plant_params, dt)
        if not self.state.is_finite():
            raise NumericalError(f"{self.params.name}: non-finite state at t={self.state.time:.4f}s")


@dataclass
class BilateralPair:
    leader: Robot
    follower: Robot
    tick: int = 0

    @classmethod
    def create(
        cls,
        leader_params: RobotParams,
        follower_params: RobotParams,
        theta0=None,
        mismatch: float = 0.0,
        seed: int = 0,
    ) -> BilateralPair:
        """Build a pair at rest; ``mismatch`` perturbs each true plant's J and D."""
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        return cls(
            leader=Robot.create(leader_params, theta0, leader_params.perturbed(mismatch, rng)),
            follower=Robot.create(follower_params, theta0, follower_params.perturbed(mismatch, rng)),
        )

    @property
    def time(self) -> float:
        return self.tick * CONTROL_DT


def _min_jerk(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s**2)


@dataclass
class OperatorModel:
    """Scripted human: a PD servo pulling the leader toward a reference.

    ``times``/``angles`` define a piecewise-linear 19-joint reference; the
    hand torque is ``stiffness (ref - theta) - damping omega``.
    """

    times: np.ndarray
    angles: np.ndarray
    stiffness: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    damping: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.angles = np.atleast_2d(np.asarray(self.angles, dtype=float))
        self.stiffness = np.broadcast_to(np.asarray(self.stiffness, dtype=float), (N_JOINTS,)).copy()
        self.damping = np.broadcast_to(np.asarray(self.damping, dtype=float), (N_JOINTS,)).copy()
        if self.angles.shape != (len(self.times), N_JOINTS):
            raise ValueError("reference angles must have shape (len(times), 19)")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("reference times must be strictly increasing")

    def reference(self, t: float) -> np.ndarray:
        if len(self.times) == 1:
            return self.angles[0].copy()
        idx = np.searchsorted(self.times, t, side="right")
        if idx <= 0:
            return self.angles[0].copy()
        if idx >= len(self.times):
            return self.angles[-1].copy()
        t0, t1 = self.times[idx - 1], self.times[idx]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.angles[idx - 1] + w * self.angles[idx]

    def torque(self, t: float, theta: np.ndarray, omega: np.ndarray) -> np.ndarray:
        return self.stiffness * (self.reference(t) - theta) - self.damping * omega

    def covers(self, duration: float) -> bool:
        return len(self.times) == 1 or self.times[-1] >= duration - 1e-12

    @staticmethod
    def gains_for(
        leader_params: RobotParams,
        follower_params: RobotParams,
        bandwidth: float = 5.0,
        damping_ratio: float = 0.9,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Hand stiffness/damping giving the teleoperated pair a target bandwidth.

        In free motion the pair's common mode accelerates at
        ``Kf/4 (1/J_l + 1/J_f)`` per unit of hand torque; the gains are chosen
        so that this acceleration loop has natural frequency ``bandwidth``.
        Joints without force feedback (Kf = 0) get zero gains.
        """
        k_eff = 0.25 * leader_params.kf * (1 / leader_params.inertia) + 0.25 * follower_params.kf * (
            1 / follower_params.inertia
        )
        with np.errstate(divide="ignore"):
            stiffness = np.where(k_eff > 0, bandwidth**2 / k_eff, 0.0)
            damping = np.where(k_eff > 0, 2 * damping_ratio * bandwidth / k_eff, 0.0)
        return stiffness, damping

    @classmethod
    def reach(
        cls,
        start,
        goal,
        t_start: float,
        t_end: float,
        stiffness,
        damping,
        samples: int = 50,
    ) -> OperatorModel:
        """Minimum-jerk reach from ``start`` to ``goal`` between two times."""
        start = np.broadcast_to(np.asarray(start, dtype=float), (N_JOINTS,))
        goal = np.broadcast_to(np.asarray(goal, dtype=float), (N_JOINTS,))
        ts = np.linspace(t_start, t_end, samples)
        s = _min_jerk((ts - t_start) / (t_end - t_start))
        angles = start + np.outer(s, goal - start)
        if t_start > 0:
            ts = np.concatenate([[0.0], ts])
            angles = np.vstack([start, angles])
        return cls(ts, angles, stiffness, damping)


@dataclass
class TeleopResult:
    """Log plus ground-truth signals not visible to the controller."""

    log: MotionLog
    contact_torque: np.ndarray
    operator_torque: np.ndarray
    theta_l_true: np.ndarray
    theta_f_true: np.ndarray


def simulate_teleop(
    pair: BilateralPair,
    operator: OperatorModel,
    contact: ContactModel,
    duration: float,
    sensor_noise: float = 0.0,
    seed: int = 0,
    metadata: dict | None = None,
) -> TeleopResult:
    """Run the pair at 500 Hz for ``duration`` seconds.

    The hand torque acts on the leader, the contact model on the follower.
    Every tick logs measured angle, velocity estimate, reaction estimate and
    torque reference of both robots. ``sensor_noise`` is the std (rad) of
    Gaussian angle noise, drawn from ``seed``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * CONTROL_RATE))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    blocks = {k: np.empty((n, N_JOINTS)) for k in ("theta_l", "omega_l", "tau_l", "theta_f", "omega_f", "tau_f", "tref_l", "tref_f")}
    truth = {k: np.empty((n, N_JOINTS)) for k in ("contact", "hand", "th_l", "th_f")}
    t = (pair.tick + np.arange(n)) / CONTROL_RATE
    leader, follower = pair.leader, pair.follower
    for k in range(n):
        noise_l = rng.normal(0.0, sensor_noise, N_JOINTS) if sensor_noise > 0 else None
        noise_f = rng.normal(0.0, sensor_noise, N_JOINTS) if sensor_noise > 0 else None
        resp_l, dis_l = leader.sense(noise_l)
        resp_f, dis_f = follower.sense(noise_f)
        tau_l, tau_f = bilateral_torques(resp_l, resp_f, dis_l, dis_f, leader.params, follower.params)

        hand = operator.torque(t[k], leader.state.theta, leader.state.omega)
        env = contact_torque(follower.state, contact)

        blocks["theta_l"][k], blocks["omega_l"][k], blocks["tau_l"][k] = resp_l.theta, resp_l.omega, resp_l.tau_res
        blocks["theta_f"][k], blocks["omega_f"][k], blocks["tau_f"][k] = resp_f.theta, resp_f.omega, resp_f.tau_res
        blocks["tref_l"][k], blocks["tref_f"][k] = tau_l, tau_f
        truth["contact"][k], truth["hand"][k] = env, hand
        truth["th_l"][k], truth["th_f"][k] = leader.state.theta, follower.state.theta

        try:
            leader.actuate(tau_l, -hand)
            follower.actuate(tau_f, env)
        except NumericalError as exc:
            raise NumericalError(f"teleop diverged at tick {pair.tick}: {exc}") from None
        pair.tick += 1

    meta = {
        "kind": "teleop",
        "leader": leader.params.name,
        "follower": follower.params.name,
        "seed": seed,
        "sensor_noise": sensor_noise,
    }
    meta.update(metadata or {})
    log = MotionLog(t=t, rate=CONTROL_RATE, metadata=meta, **blocks)
    return TeleopResult(log, truth["contact"], truth["hand"], truth["th_l"], truth["th_f"])


def run_teleop(
    pair: BilateralPair,
    operator: OperatorModel,
    contact: ContactModel,
    duration: float,
    sensor_noise: float = 0.0,
    seed: int = 0,
    metadata: dict | None = None,
) -> MotionLog:
    return simulate_teleop(pair, operator, contact, duration, sensor_noise, seed, metadata).log
