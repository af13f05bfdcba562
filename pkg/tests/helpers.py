"""Small builders shared by the imitation tests."""

import numpy as np

from teachsim.motionlog import RESPONSE_BLOCKS, MotionLog
from teachsim.params import N_JOINTS


def synthetic_log(n, xy, seed=0):
    """Smooth random 500 Hz log carrying ``target_xy`` metadata."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / 500.0
    blocks = {}
    for name in RESPONSE_BLOCKS:
        freq = rng.uniform(0.2, 2.0, N_JOINTS)
        phase = rng.uniform(0, 2 * np.pi, N_JOINTS)
        blocks[name] = np.sin(np.outer(t, 2 * np.pi * freq) + phase) + xy[0] - xy[1]
    return MotionLog(t=t, metadata={"target_xy": [float(v) for v in xy]}, **blocks)


def synthetic_logs(count, n=200, seed=0):
    rng = np.random.default_rng(seed)
    return [synthetic_log(n, rng.uniform(0, 1, 2), seed=seed + i) for i in range(count)]
