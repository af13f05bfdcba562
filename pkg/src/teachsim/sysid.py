"""Inverse-dynamics identification by recursive least squares.

For each joint ``j`` of a group the free-motion model is

    tau_ref = J_j theta'' + D_j theta' + Phi_j(theta) . (p1, p2, p3)

where the gravity regressor ``Phi`` is nonzero only for joints 1-4 and 9-12.
Angular acceleration comes from pseudo-differentiating the logged velocity
(itself a pseudo-derivative of the angle). To keep the regression exactly
linear, every other column and the target pass through the same two
first-order low-passes, and the torque/velocity/gravity columns are taken
one tick earlier than the acceleration, since the command at tick k-1 is what
produced the velocity change seen at tick k.

p1 and p3 enter the gravity torque of every joint with identical
coefficients, so data determine only their sum. The three-parameter
regressor is kept, and the fit splits the sum by the estimator's prior (the
minimum-norm split, p1 = p3, for a zero start); ``GroupParams.identifiable``
reports the parameters the data actually pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .motionlog import MotionLog
from .params import N_JOINTS, STANDARD_GRAVITY, LumpedGravity, RobotParams
from .plant import GRAVITY_JOINTS, gravity_regressor

GROUPS = {
    "1-4": np.arange(0, 4),
    "5-8": np.arange(4, 8),
    "9-12": np.arange(8, 12),
    "13-16": np.arange(12, 16),
}
DEFAULT_MOTION_THRESHOLD = 0.05
SKIP_DENOMINATOR = 1e-12


def group_joints(group: str) -> np.ndarray:
    try:
        return GROUPS[group]
    except KeyError:
        raise ValueError(f"unknown joint group {group!r}; choose from {sorted(GROUPS)}") from None


def has_gravity(group: str) -> bool:
    return bool(np.isin(group_joints(group), GRAVITY_JOINTS).all())


def parameter_names(group: str) -> list[str]:
    joints = group_joints(group) + 1
    names = [f"J{j}" for j in joints] + [f"D{j}" for j in joints]
    if has_gravity(group):
        names += ["p1", "p2", "p3"]
    return names


@dataclass(frozen=True)
class RegressorRow:
    joint: int
    values: np.ndarray
    target: float


@dataclass(frozen=True)
class Regressor:
    """Stacked regressor rows of one joint group, in time order per joint."""

    group: str
    joint: np.ndarray
    tick: np.ndarray
    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def rows(self):
        for j, x, y in zip(self.joint, self.X, self.y):
            yield RegressorRow(int(j), x, float(y))

    def interleaved(self) -> Regressor:
        """Rows ordered by tick (joints of one tick adjacent), as a streaming identifier sees them."""
        order = np.lexsort((self.joint, self.tick))
        return replace(self, joint=self.joint[order], tick=self.tick[order], X=self.X[order], y=self.y[order])

    def for_joint(self, joint: int) -> Regressor:
        m = self.joint == joint
        return replace(self, joint=self.joint[m], tick=self.tick[m], X=self.X[m], y=self.y[m])


def _lowpass(x: np.ndarray, cutoff: float, dt: float) -> np.ndarray:
    """Backward-Euler first-order low-pass along axis 0, started in steady state."""
    wdt = cutoff * dt
    b = np.array([wdt / (1.0 + wdt)])
    a = np.array([1.0, -1.0 / (1.0 + wdt)])
    zi = np.multiply.outer(lfilter_zi(b, a), x[0])
    return lfilter(b, a, x, axis=0, zi=zi)[0]


def build_regressor(
    log: MotionLog,
    group: str,
    cutoffs,
    robot: str = "follower",
    threshold: float = DEFAULT_MOTION_THRESHOLD,
    warmup: float = 1.0,
    g: float = STANDARD_GRAVITY,
) -> Regressor:
    """Regressor rows for one joint group of ``robot`` from a free-motion log.

    Rows whose joint speed is at or below ``threshold`` (rad/s) are dropped, as
    are the first ``warmup`` seconds while the filters settle. An empty
    result is returned, not raised, when nothing survives.
    """
    if not log.has_torque_reference:
        raise ValueError("identification needs a log with torque reference columns")
    side = {"follower": "f", "leader": "l"}[robot]
    theta = getattr(log, f"theta_{side}")
    omega = getattr(log, f"omega_{side}")
    tref = getattr(log, f"tref_{side}")
    cutoffs = np.broadcast_to(np.asarray(cutoffs, dtype=float), (N_JOINTS,))
    joints = group_joints(group)
    n_j = len(joints)
    n_par = len(parameter_names(group))
    dt = 1.0 / log.rate
    n = len(log)
    start = max(int(round(warmup * log.rate)), 1)
    if n <= start + 1:
        return Regressor(group, np.zeros(0, int), np.zeros(0, int), np.zeros((0, n_par)), np.zeros(0))

    phi = gravity_regressor(theta, g) if has_gravity(group) else None
    parts = []
    for col, j in enumerate(joints):
        fc = cutoffs[j]
        dv = np.diff(omega[:, j], prepend=omega[0, j]) / dt
        accel = _lowpass(dv, fc, dt)
        vel = _lowpass(omega[:, j], fc, dt)
        target = _lowpass(_lowpass(tref[:, j], fc, dt), fc, dt)
        # k indexes acceleration, k-1 everything else
        k = np.arange(start, n)
        moving = np.abs(omega[k - 1, j]) > threshold
        k = k[moving]
        X = np.zeros((len(k), n_par))
        X[:, col] = accel[k]
        X[:, n_j + col] = vel[k - 1]
        if phi is not None:
            row = int(np.flatnonzero(GRAVITY_JOINTS == j)[0])
            grav = _lowpass(_lowpass(phi[:, row, :], fc, dt), fc, dt)
            X[:, 2 * n_j :] = grav[k - 1]
        parts.append((np.full(len(k), j), k, X, target[k - 1]))
    return Regressor(
        group,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.vstack([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
    )


@dataclass
class RlsState:
    theta: np.ndarray
    P: np.ndarray
    forgetting: float = 1.0
    updates: int = 0
    skipped: int = 0

    @classmethod
    def create(cls, n_params: int, initial_gain: float = 1e8, forgetting: float = 1.0) -> RlsState:
        if not 0 < forgetting <= 1:
            raise ValueError("forgetting factor must be in (0, 1]")
        return cls(np.zeros(n_params), np.eye(n_params) * initial_gain, forgetting)

    def is_positive_definite(self, tol: float = 1e-9) -> bool:
        if not np.allclose(self.P, self.P.T, rtol=tol, atol=0):
            return False
        try:
            np.linalg.cholesky(self.P)
        except np.linalg.LinAlgError:
            return False
        return True


def rls_update(state: RlsState, row: RegressorRow | np.ndarray, target: float | None = None) -> RlsState:
    """One recursive least-squares step (in place; the state is also returned)."""
    if isinstance(row, RegressorRow):
        x, y = row.values, row.target
    else:
        x, y = row, target
    Px = state.P @ x
    denom = state.forgetting + x @ Px
    if not denom > SKIP_DENOMINATOR:
        state.skipped += 1
        return state
    gain = Px / denom
    state.theta = state.theta + gain * (y - x @ state.theta)
    P = (state.P - np.outer(gain, Px)) / state.forgetting
    state.P = 0.5 * (P + P.T)
    state.updates += 1
    return state


def rls_fit(reg: Regressor, forgetting: float = 1.0, initial_gain: float = 1e8) -> RlsState:
    state = RlsState.create(reg.X.shape[1], initial_gain, forgetting)
    for x, y in zip(reg.X, reg.y):
        rls_update(state, x, y)
    return state


def batch_least_squares(reg: Regressor) -> np.ndarray:
    """Independent check: ordinary least squares on the stacked rows."""
    return np.linalg.lstsq(reg.X, reg.y, rcond=None)[0]


@dataclass(frozen=True)
class GroupParams:
    """Identified (or true) parameters of one joint group."""

    group: str
    inertia: np.ndarray
    viscous: np.ndarray
    lumped: np.ndarray | None = None

    @classmethod
    def from_vector(cls, group: str, vec: np.ndarray) -> GroupParams:
        n = len(group_joints(group))
        lumped = np.asarray(vec[2 * n :], dtype=float) if has_gravity(group) else None
        return cls(group, np.asarray(vec[:n], dtype=float), np.asarray(vec[n : 2 * n], dtype=float), lumped)

    @classmethod
    def from_robot(cls, group: str, params: RobotParams) -> GroupParams:
        joints = group_joints(group)
        lumped = params.gravity.lumped().as_array() if has_gravity(group) else None
        return cls(group, params.inertia[joints].copy(), params.viscous[joints].copy(), lumped)

    def vector(self) -> np.ndarray:
        parts = [self.inertia, self.viscous]
        if self.lumped is not None:
            parts.append(self.lumped)
        return np.concatenate(parts)

    def as_dict(self) -> dict:
        return dict(zip(parameter_names(self.group), map(float, self.vector())))

    def identifiable(self) -> dict:
        """J, D and, for gravity groups, ``p1+p3`` and ``p2``."""
        n = len(group_joints(self.group))
        out = dict(list(self.as_dict().items())[: 2 * n])
        if self.lumped is not None:
            out["p1+p3"] = float(self.lumped[0] + self.lumped[2])
            out["p2"] = float(self.lumped[1])
        return out

    def apply_to(self, params: RobotParams) -> RobotParams:
        """Copy of ``params`` with this group's J, D (and lumped gravity) replaced."""
        joints = group_joints(self.group)
        inertia = params.inertia.copy()
        viscous = params.viscous.copy()
        inertia[joints] = self.inertia
        viscous[joints] = self.viscous
        gravity = params.gravity
        if self.lumped is not None:
            gravity = LumpedGravity(*map(float, self.lumped), g=params.gravity.g)
        return params.with_updates(inertia=inertia, viscous=viscous, gravity=gravity)


def evaluate_params(params: GroupParams, reg: Regressor) -> dict[int, float]:
    """Per-joint RMS torque error (N m) of the model over the regressor rows.

    The target is the filtered torque command, so a noiseless log scored
    with the true parameters gives zero.
    """
    residual = reg.y - reg.X @ params.vector()
    out = {}
    for j in group_joints(params.group):
        m = reg.joint == j
        out[int(j)] = float(np.sqrt(np.mean(residual[m] ** 2))) if m.any() else float("nan")
    return out


@dataclass
class IdentificationResult:
    group: str
    params: GroupParams
    rls: RlsState
    train_rows: int
    test_rows: int
    train_rms: dict
    test_rms: dict
    extra: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {
            "group": self.group,
            "parameters": self.params.as_dict(),
            "identifiable": self.params.identifiable(),
            "train_rows": self.train_rows,
            "test_rows": self.test_rows,
            "skipped_updates": self.rls.skipped,
            "train_rms": {str(j + 1): v for j, v in self.train_rms.items()},
            "test_rms": {str(j + 1): v for j, v in self.test_rms.items()},
        }


def split_test(log: MotionLog, test_seconds: float) -> tuple[MotionLog, MotionLog]:
    """Hold out the last ``test_seconds`` of a log for evaluation."""
    n_test = int(round(test_seconds * log.rate))
    if n_test <= 0 or n_test >= len(log):
        raise ValueError("test slice must be shorter than the log")
    return log.slice(0, len(log) - n_test), log.slice(len(log) - n_test)


def identify(
    log: MotionLog,
    group: str,
    cutoffs,
    test_seconds: float = 10.0,
    threshold: float = DEFAULT_MOTION_THRESHOLD,
    forgetting: float = 1.0,
    robot: str = "follower",
    g: float = STANDARD_GRAVITY,
) -> IdentificationResult:
    """Fit one joint group on all but the last ``test_seconds`` and score on the rest."""
    train_log, test_log = split_test(log, test_seconds)
    train = build_regressor(train_log, group, cutoffs, robot, threshold, g=g).interleaved()
    test = build_regressor(test_log, group, cutoffs, robot, threshold, g=g)
    if len(train) == 0:
        raise ValueError(f"group {group}: no moving samples above {threshold} rad/s")
    state = rls_fit(train, forgetting)
    params = GroupParams.from_vector(group, state.theta)
    return IdentificationResult(
        group=group,
        params=params,
        rls=state,
        train_rows=len(train),
        test_rows=len(test),
        train_rms=evaluate_params(params, train),
        test_rms=evaluate_params(params, test),
    )


def add_torque_noise(log: MotionLog, fraction: float, seed: int = 0) -> MotionLog:
    """Gaussian noise on both torque-reference blocks, std = fraction * per-joint RMS."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    out = {}
    for name in ("tref_l", "tref_f"):
        data = getattr(log, name)
        rms = np.sqrt(np.mean(data**2, axis=0))
        out[name] = data + rng.normal(size=data.shape) * (fraction * rms)
    return replace(log, metadata=dict(log.metadata, torque_noise=fraction), **out)


def excitation_reference(
    joints,
    duration: float,
    seed: int = 0,
    amplitude: float = 0.5,
    n_sines: int = 4,
    band=(0.1, 0.8),
    rate: float = 50.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Sum-of-sines reference (times, angles) exciting ``joints`` from rest.

    Frequencies are in Hz; a 1 s cosine fade-in avoids a start-up jolt.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    times = np.arange(0.0, duration + 1.0 / rate, 1.0 / rate)
    angles = np.zeros((len(times), N_JOINTS))
    fade = np.clip(times, 0, 1.0)
    fade = 0.5 - 0.5 * np.cos(np.pi * fade)
    for j in np.atleast_1d(joints):
        freqs = rng.uniform(*band, n_sines)
        phases = rng.uniform(0, 2 * np.pi, n_sines)
        wave = np.sum(np.sin(2 * np.pi * np.outer(times, freqs) + phases) - np.sin(phases), axis=1)
        angles[:, j] = amplitude / n_sines * wave * fade
    return times, angles
