"""Differential-drive wheeled robot dynamics in generalized coordinates.

Each robot has generalized coordinates q = (x, y, theta): mass-center
position and orientation.  The descriptor form of the dynamics is

    M(q) qddot = F(q, qdot) + Fc

where M mixes the two force balances with the nonholonomic rolling
constraint row (sin(theta) xdot - cos(theta) ydot = const along free
motion).  M is nonsymmetric but always invertible: det M = m J d^2 / l.

Driving torques act through the constant input map P, whose range covers
the first two rows only; the third row of any applied force is the
unrealizable "slip" channel, tracked as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Input map F = P @ [u_right, u_left]; P_PINV is its Moore-Penrose inverse.
P = np.array([[1.0, 1.0], [1.0, -1.0], [0.0, 0.0]])
P_PINV = np.array([[0.5, 0.5, 0.0], [0.5, -0.5, 0.0]])


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of one robot.

    Attributes:
        m: mass [kg].
        J: rotational inertia about the robot center [kg m^2].
        l: distance between the wheels and the robot center [m].
        d: wheel radius [m].
    """

    m: float = 1.0
    J: float = 1.0
    l: float = 0.1
    d: float = 0.05

    def __post_init__(self):
        for name in ("m", "J", "l", "d"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"robot parameter {name} must be positive")


@dataclass
class StackedState:
    """Full generalized state of leader + n followers at time t.

    q and qdot are flat vectors of length 3(n+1), ordered leader first.
    """

    q: np.ndarray
    qdot: np.ndarray
    t: float

    @property
    def robot_count(self) -> int:
        return self.q.size // 3


def mass_matrix(q_i, params: RobotParams) -> np.ndarray:
    """Per-robot descriptor mass matrix.

    [[m d cos(th), m d sin(th), 0      ],
     [0,           0,           J d / l],
     [sin(th),     -cos(th),    0      ]]
    """
    theta = float(q_i[2])
    md = params.m * params.d
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [
            [md * c, md * s, 0.0],
            [0.0, 0.0, params.J * params.d / params.l],
            [s, -c, 0.0],
        ]
    )


def drift_force(q_i, qdot_i, params: RobotParams) -> np.ndarray:
    """Velocity-coupling force of one robot (zero at rest)."""
    theta = float(q_i[2])
    xd, yd, thd = (float(v) for v in qdot_i)
    md = params.m * params.d
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [
            md * s * thd * xd - md * c * thd * yd,
            0.0,
            -c * thd * xd - s * thd * yd,
        ]
    )


def input_map() -> tuple[np.ndarray, np.ndarray]:
    """Constant torque-to-force map P and its pseudoinverse (P_pinv @ P = I2)."""
    return P.copy(), P_PINV.copy()


def stacked_blocks(q, qdot, params_list) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized per-robot mass matrices and drift forces.

    Args:
        q, qdot: (k, 3) stacked coordinates/velocities, leader first.
        params_list: k RobotParams.

    Returns:
        (M_blocks, F_blocks) with shapes (k, 3, 3) and (k, 3).
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    k = q.shape[0]
    if qdot.shape != q.shape or len(params_list) != k:
        raise ValueError("q, qdot and params_list sizes are inconsistent")
    md = np.array([p.m * p.d for p in params_list])
    jdl = np.array([p.J * p.d / p.l for p in params_list])
    theta = q[:, 2]
    c, s = np.cos(theta), np.sin(theta)
    xd, yd, thd = qdot[:, 0], qdot[:, 1], qdot[:, 2]

    M = np.zeros((k, 3, 3))
    M[:, 0, 0] = md * c
    M[:, 0, 1] = md * s
    M[:, 1, 2] = jdl
    M[:, 2, 0] = s
    M[:, 2, 1] = -c

    F = np.zeros((k, 3))
    F[:, 0] = md * thd * (s * xd - c * yd)
    F[:, 2] = -thd * (c * xd + s * yd)
    return M, F


def stacked_system(q, qdot, params_list) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal mass matrix and stacked drift force of the whole system.

    Args:
        q, qdot: flat vectors of length 3k or arrays of shape (k, 3).

    Returns:
        (M, F): M is (3k, 3k) block diagonal, F a flat vector of length 3k.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    qdot = np.asarray(qdot, dtype=float).reshape(-1, 3)
    Mb, Fb = stacked_blocks(q, qdot, params_list)
    k = q.shape[0]
    M = np.zeros((3 * k, 3 * k))
    for i in range(k):
        M[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = Mb[i]
    return M, Fb.reshape(-1)


def nonholonomic_slip(q, qdot) -> np.ndarray:
    """Per-robot lateral slip c_i = sin(th) xdot - cos(th) ydot (diagnostic)."""
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    qdot = np.asarray(qdot, dtype=float).reshape(-1, 3)
    return np.sin(q[:, 2]) * qdot[:, 0] - np.cos(q[:, 2]) * qdot[:, 1]
