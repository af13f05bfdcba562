"""Scripted reach-to-(x, y) teaching task on a two-joint planar sub-chain.

Scene coordinates in the unit square map linearly onto the angles of two
gravity-free joints, so a demonstration for object (x, y) is a teleoperated
reach to ``span * (xy - 0.5)``.
"""

from __future__ import annotations

import numpy as np

from ..bilateral import BilateralPair, OperatorModel, run_teleop
from ..motionlog import MotionLog
from ..params import N_JOINTS, RobotParams
from ..plant import ContactModel

SUBCHAIN = (4, 5)
SPAN = 1.6


def xy_to_angles(xy, joints=SUBCHAIN, span: float = SPAN) -> np.ndarray:
    theta = np.zeros(N_JOINTS)
    theta[list(joints)] = span * (np.asarray(xy, dtype=float) - 0.5)
    return theta


def angles_to_xy(theta, joints=SUBCHAIN, span: float = SPAN) -> np.ndarray:
    return np.asarray(theta, dtype=float)[..., list(joints)] / span + 0.5


def reach_demo(
    leader: RobotParams,
    follower: RobotParams,
    xy,
    duration: float = 3.0,
    reach: tuple = (0.0, 0.2),
    bandwidth: float = 4.0,
    joints=SUBCHAIN,
    mismatch: float = 0.0,
    seed: int = 0,
) -> MotionLog:
    """Teleoperated reach from the zero pose to the pose of ``xy``.

    The operator's reference moves to the goal quickly (``reach`` window) and
    the hand compliance shapes the actual motion, so the demonstrated command
    depends on the current state and the goal rather than on elapsed time.
    """
    pair = BilateralPair.create(leader, follower, mismatch=mismatch, seed=seed)
    K, B = OperatorModel.gains_for(leader, follower, bandwidth)
    goal = xy_to_angles(xy, joints)
    operator = OperatorModel.reach(np.zeros(N_JOINTS), goal, reach[0], reach[1], K, B)
    meta = {"task": "reach", "target_xy": [float(v) for v in xy], "joints": list(joints)}
    return run_teleop(pair, operator, ContactModel.none(), duration, seed=seed, metadata=meta)
