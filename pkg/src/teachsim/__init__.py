"""Simulated human-teaching stack for a 19-joint dual-arm robot pair.

Bilateral teleoperation with observer-based acceleration control,
inverse-dynamics identification, motion-copying playback and
bilateral-control-based imitation learning.
"""

__version__ = "0.1.0"

from .bilateral import BilateralPair, OperatorModel, Robot, follower_law, run_teleop, simulate_teleop
from .motionlog import MotionLog, double_speed, zero_phase_filter
from .params import ConfigError, RobotParams, load_robot_params, preset
from .plant import ContactModel, NumericalError, PlantState, gravity_torque, plant_step

__all__ = [
    "BilateralPair",
    "ConfigError",
    "ContactModel",
    "MotionLog",
    "NumericalError",
    "OperatorModel",
    "PlantState",
    "Robot",
    "RobotParams",
    "double_speed",
    "follower_law",
    "gravity_torque",
    "load_robot_params",
    "plant_step",
    "preset",
    "run_teleop",
    "simulate_teleop",
    "zero_phase_filter",
]
