"""Time-varying formation tracking: desired offsets, errors, and controller.

The control objective is q_i(t) - q_0(t) -> h_i(t) for prescribed offsets
h_i (with h_0 = 0), encoded as the equality constraint

    (Lbar x I3) (q - h) = 0.

Baumgarte stabilization with the operator gains alpha (Lbar + I) and
beta (Lbar + I) gives the constraint right-hand side

    b = (Lbar x I3) hddot - alpha [(Lbar+I) x I3] edot - beta [(Lbar+I) x I3] e

with e = (Lbar x I3)(q - h).  The tracking force has two equivalent forms:
a pseudoinverse form M (Lbar x I3)^+ (b - A M^-1 F) and an expanded form
that uses only the consensus projector Q, Lbar itself, and the column-sum
vector eta (no per-step pseudoinverse):

    Fce = M [(I - Q) x I3] (hddot + g - M^-1 F)
        + M (Lbar x I3) g - (M/(n+1)) [(1 eta^T) x I3] g,
    g   = -alpha (qdot - hdot) - beta (q - h).

Along the closed loop the error obeys the autonomous linear ODE

    eddot = -alpha [(Lbar+I) x I3] edot - beta [(Lbar+I) x I3] e

whose block eigenvalues are characteristic_roots(lam_i, alpha, beta) over
the spectrum of Lbar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .guk import BaumgarteGains
from .robot import P_PINV
from .topology import AugmentedTopology

# ControlGains is the same (alpha, beta) pair used for Baumgarte stabilization.
ControlGains = BaumgarteGains

_DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class ConstantRadius:
    """Fixed formation radius."""

    value: float = 4.0

    t_max: float = math.inf

    def radius(self, t: float) -> tuple[float, float, float]:
        return self.value, 0.0, 0.0


@dataclass(frozen=True)
class CosineSineRadius:
    """Piecewise radius schedule: cosine breathing, then a sine ramp.

        R(t) = base + ca * cos(2 pi t / cp)                      for t <= ts
        R(t) = base + ca * cos(2 pi ts / cp)
                    + sa * sin(2 pi (t - ts) / sp)               for t >  ts

    R is continuous at the switch time ts but its derivative jumps there;
    rate/accel return the right-hand limits at ts so the integrator stays
    causal.
    """

    base: float = 4.0
    cos_amplitude: float = 2.0
    cos_period: float = 500.0
    switch_time: float = 300.0
    sin_amplitude: float = 2.0
    sin_period: float = 600.0
    t_max: float = 470.0

    def radius(self, t: float) -> tuple[float, float, float]:
        """(R, Rdot, Rddot) at time t, right-continuous derivatives."""
        wc = 2.0 * math.pi / self.cos_period
        ws = 2.0 * math.pi / self.sin_period
        if t < self.switch_time:
            r = self.base + self.cos_amplitude * math.cos(wc * t)
            rd = -self.cos_amplitude * wc * math.sin(wc * t)
            rdd = -self.cos_amplitude * wc * wc * math.cos(wc * t)
        else:
            plateau = self.base + self.cos_amplitude * math.cos(wc * self.switch_time)
            u = ws * (t - self.switch_time)
            r = plateau + self.sin_amplitude * math.sin(u)
            rd = self.sin_amplitude * ws * math.cos(u)
            rdd = -self.sin_amplitude * ws * ws * math.sin(u)
        return r, rd, rdd


@dataclass(frozen=True)
class CircularFormation:
    """Circular formation with time-varying radius.

    Follower i sits at angle w t + phase_i on a circle of radius R(t) around
    the leader, with its heading offset equal to the same angle:

        h_i(t) = [R sin(w t + p_i), R cos(w t + p_i), w t + p_i]

    The leader offset h_0 is identically zero.
    """

    n: int
    angular_rate: float = 0.6
    phases: tuple[float, ...] = ()
    radius: CosineSineRadius | ConstantRadius = ConstantRadius()

    def __post_init__(self):
        phases = self.phases or tuple((i * 2.0 * math.pi / self.n) for i in range(self.n))
        if len(phases) != self.n:
            raise ValueError(f"need {self.n} phase offsets, got {len(phases)}")
        object.__setattr__(self, "phases", tuple(float(p) for p in phases))

    @property
    def t_max(self) -> float:
        return self.radius.t_max

    def targets(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(h, hdot, hddot) as (n+1, 3) blocks, leader row zero."""
        _check_domain(t, self.t_max)
        r, rd, rdd = self.radius.radius(t)
        w = self.angular_rate
        ang = w * t + np.asarray(self.phases)
        s, c = np.sin(ang), np.cos(ang)

        k = self.n + 1
        h = np.zeros((k, 3))
        hd = np.zeros((k, 3))
        hdd = np.zeros((k, 3))
        h[1:, 0] = r * s
        h[1:, 1] = r * c
        h[1:, 2] = ang
        hd[1:, 0] = rd * s + r * w * c
        hd[1:, 1] = rd * c - r * w * s
        hd[1:, 2] = w
        hdd[1:, 0] = rdd * s + 2.0 * rd * w * c - r * w * w * s
        hdd[1:, 1] = rdd * c - 2.0 * rd * w * s - r * w * w * c
        return h, hd, hdd


@dataclass(frozen=True)
class SampledFormation:
    """Formation offsets given as a sampled table with linear interpolation.

    times is strictly increasing; h, hdot, hddot have shape (len(times), 3(n+1)).
    """

    times: np.ndarray
    h: np.ndarray
    hdot: np.ndarray
    hddot: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if times.size < 2 or np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be strictly increasing, length >= 2")
        for name in ("h", "hdot", "hddot"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[0] != times.size or arr.shape[1] % 3 != 0:
                raise ValueError(f"{name} must have shape (len(times), 3(n+1))")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return self.h.shape[1] // 3 - 1

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def targets(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        _check_domain(t, self.t_max, t_min=float(self.times[0]))
        tt = min(max(t, self.times[0]), self.times[-1])
        j = int(np.searchsorted(self.times, tt, side="right")) - 1
        j = min(max(j, 0), self.times.size - 2)
        w = (tt - self.times[j]) / (self.times[j + 1] - self.times[j])
        k = self.h.shape[1] // 3
        out = []
        for arr in (self.h, self.hdot, self.hddot):
            row = (1.0 - w) * arr[j] + w * arr[j + 1]
            out.append(row.reshape(k, 3))
        return out[0], out[1], out[2]


@dataclass(frozen=True)
class LineSineLeader:
    """Leader reference: constant x speed with a sinusoidal y sweep.

        q0(t) = [x_rate t, y_amplitude sin(2 pi t / y_period), 0]
    """

    x_rate: float = 0.1
    y_amplitude: float = 3.0
    y_period: float = 300.0

    def position(self, t: float) -> np.ndarray:
        w = 2.0 * math.pi / self.y_period
        return np.array([self.x_rate * t, self.y_amplitude * math.sin(w * t), 0.0])

    def velocity(self, t: float) -> np.ndarray:
        w = 2.0 * math.pi / self.y_period
        return np.array([self.x_rate, self.y_amplitude * w * math.cos(w * t), 0.0])

    def acceleration(self, t: float) -> np.ndarray:
        w = 2.0 * math.pi / self.y_period
        return np.array([0.0, -self.y_amplitude * w * w * math.sin(w * t), 0.0])


@dataclass(frozen=True)
class StationaryLeader:
    """Leader pinned at a fixed pose."""

    pose: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def position(self, t: float) -> np.ndarray:
        return np.asarray(self.pose, dtype=float).copy()

    def velocity(self, t: float) -> np.ndarray:
        return np.zeros(3)

    def acceleration(self, t: float) -> np.ndarray:
        return np.zeros(3)


def _check_domain(t: float, t_max: float, t_min: float = 0.0) -> None:
    if t < t_min - _DOMAIN_TOL or t > t_max + _DOMAIN_TOL:
        raise ValueError(f"time {t} outside trajectory domain [{t_min}, {t_max}]")


def formation_targets(t: float, traj) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Desired offsets and derivatives at time t as flat 3(n+1) vectors."""
    h, hd, hdd = traj.targets(t)
    return h.reshape(-1), hd.reshape(-1), hdd.reshape(-1)


def formation_error(q, h, topology: AugmentedTopology) -> np.ndarray:
    """Stacked tracking error e = (Lbar x I3)(q - h); leader block is zero."""
    k = topology.n + 1
    q = np.asarray(q, dtype=float).reshape(k, 3)
    h = np.asarray(h, dtype=float).reshape(k, 3)
    return (topology.augmented_laplacian @ (q - h)).reshape(-1)


def baumgarte_constraint_rhs(q, qdot, t, topology, gains, traj) -> np.ndarray:
    """Stabilized constraint right-hand side b as (n+1, 3) blocks."""
    Lbar = topology.augmented_laplacian
    k = topology.n + 1
    q = np.asarray(q, dtype=float).reshape(k, 3)
    qdot = np.asarray(qdot, dtype=float).reshape(k, 3)
    h, hd, hdd = traj.targets(t)
    e = Lbar @ (q - h)
    ed = Lbar @ (qdot - hd)
    return Lbar @ hdd - gains.alpha * (Lbar @ ed + ed) - gains.beta * (Lbar @ e + e)


def _equality_force_blocks(q, qdot, t, topology, gains, traj, M_blocks, a_blocks):
    """Expanded-form tracking force per robot; a_blocks = M^-1 F per robot."""
    Lbar = topology.augmented_laplacian
    k = topology.n + 1
    h, hd, hdd = traj.targets(t)
    g = -gains.alpha * (qdot - hd) - gains.beta * (q - h)
    v1 = hdd + g - a_blocks
    w = (v1 - v1.mean(axis=0)) + Lbar @ g - np.outer(np.ones(k), topology.eta @ g) / k
    return np.einsum("kij,kj->ki", M_blocks, w)


def formation_equality_force(q, qdot, t, topology, gains, traj, M, F) -> np.ndarray:
    """Tracking force in the expanded (pseudoinverse-free) form.

    Args:
        q, qdot: flat 3(n+1) state vectors.
        M, F: block-diagonal stacked mass matrix and drift force.

    Returns:
        Flat 3(n+1) force vector.
    """
    k = topology.n + 1
    q = np.asarray(q, dtype=float).reshape(k, 3)
    qdot = np.asarray(qdot, dtype=float).reshape(k, 3)
    M = np.asarray(M, dtype=float)
    a = np.linalg.solve(M, np.asarray(F, dtype=float)).reshape(k, 3)
    Mb = np.stack([M[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] for i in range(k)])
    return _equality_force_blocks(q, qdot, t, topology, gains, traj, Mb, a).reshape(-1)


def formation_equality_force_pinv(q, qdot, t, topology, gains, traj, M, F) -> np.ndarray:
    """Tracking force in the pseudoinverse form M (Lbar x I3)^+ (b - A M^-1 F).

    Kept as an independent cross-check of the expanded form; the two agree
    whenever the topology has a spanning tree.
    """
    k = topology.n + 1
    M = np.asarray(M, dtype=float)
    a = np.linalg.solve(M, np.asarray(F, dtype=float))
    b = baumgarte_constraint_rhs(q, qdot, t, topology, gains, traj).reshape(-1)
    A = np.kron(topology.augmented_laplacian, np.eye(3))
    Apinv = np.kron(topology.pinv, np.eye(3))
    return M @ (Apinv @ (b - A @ a))


def wheel_torques(Fc) -> tuple[np.ndarray, float]:
    """Per-robot wheel torques U_i = P^+ Fc_i and the projection residual.

    The residual is the norm of the third-row force components, i.e. the
    part of Fc that no wheel torque can realize.
    """
    blocks = np.asarray(Fc, dtype=float).reshape(-1, 3)
    U = blocks @ P_PINV.T
    residual = float(np.linalg.norm(blocks[:, 2]))
    return U.reshape(-1), residual


def error_dynamics_matrix(topology: AugmentedTopology, gains) -> np.ndarray:
    """State matrix of the error ODE at the (n+1)-block level.

        d/dt [e; edot] = [[0, I], [-beta (Lbar+I), -alpha (Lbar+I)]] [e; edot]

    Each eigenvalue appears with multiplicity 3 in the full stacked system.
    """
    k = topology.n + 1
    LpI = topology.augmented_laplacian + np.eye(k)
    top = np.hstack([np.zeros((k, k)), np.eye(k)])
    bottom = np.hstack([-gains.beta * LpI, -gains.alpha * LpI])
    return np.vstack([top, bottom])
