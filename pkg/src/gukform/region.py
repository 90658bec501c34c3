"""Rectangular region constraint via a tangent barrier diffeomorphism.

Every robot's (x, y) must stay strictly inside the outer rectangle
(x_o, x_f) x (y_o, y_f).  The diffeomorphism

    xi_x = tan( pi/(x_f - x_o) * (x - (x_o + x_f)/2) )     (same in y)

maps the open rectangle onto the plane, so xi stays bounded iff the robot
stays strictly inside.  The constraint channel becomes active only when
some robot leaves the inner activation rectangle [x_b, x_c] x [y_b, y_c];
it then commands the barrier dynamics xi'' = -gamma1 xi' - gamma2 xi
through the consensus direction of the formation constraint:

    xi'' = p1 + p2 r,   p2 = (d phi/d q) (Q x I3),
    r*   = -p2^+ (p1 + gamma1 xi' + gamma2 xi),
    Fci  = M (Q x I3) r*.

Because p2 has rank two (the channel can only accelerate the formation
centroid in x and y), r* is a least-squares solution; the size of the
unmet part of the barrier command is reported as a conflict diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import AugmentedTopology

PINV_RTOL = 1e-9


class RegionDomainError(RuntimeError):
    """A robot reached or crossed the outer rectangle: the barrier is undefined."""


@dataclass(frozen=True)
class RegionSpec:
    """Outer rectangle, inner activation rectangle, and barrier gains.

    Bounds are (low, high) pairs; the inner rectangle must be strictly
    inside the outer one.  hysteresis (m) optionally widens the release
    condition of the activation switch (0 keeps the hard switch).
    """

    x_outer: tuple[float, float] = (-10.0, 50.0)
    y_outer: tuple[float, float] = (-15.0, 15.0)
    x_inner: tuple[float, float] = (-9.5, 49.5)
    y_inner: tuple[float, float] = (-14.5, 14.5)
    # Critically damped barrier response (roots -3, -3): strong enough to
    # absorb a sustained conflict with the tracking channel at dt = 0.01.
    gamma1: float = 6.0
    gamma2: float = 9.0
    hysteresis: float = 0.0

    def __post_init__(self):
        for name in ("x_outer", "y_outer", "x_inner", "y_inner"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"region bound {name} must be a (low, high) pair")
            object.__setattr__(self, name, pair)
        xo, xf = self.x_outer
        xb, xc = self.x_inner
        yo, yf = self.y_outer
        yb, yc = self.y_inner
        if not (xo < xb < xc < xf):
            raise ValueError(
                "region ordering violated: require x_outer[0] < x_inner[0] "
                f"< x_inner[1] < x_outer[1], got {xo}, {xb}, {xc}, {xf}"
            )
        if not (yo < yb < yc < yf):
            raise ValueError(
                "region ordering violated: require y_outer[0] < y_inner[0] "
                f"< y_inner[1] < y_outer[1], got {yo}, {yb}, {yc}, {yf}"
            )
        if self.gamma1 <= 0.0 or self.gamma2 <= 0.0:
            raise ValueError("barrier gains gamma1, gamma2 must be positive")
        if self.hysteresis < 0.0:
            raise ValueError("hysteresis must be nonnegative")


def _xy(q) -> np.ndarray:
    return np.asarray(q, dtype=float).reshape(-1, 3)[:, :2]


def _angles(xy, region: RegionSpec) -> np.ndarray:
    """Barrier angles u = pi/(hi-lo) (coord - mid) per robot, shape (k, 2)."""
    spans = np.array(
        [region.x_outer[1] - region.x_outer[0], region.y_outer[1] - region.y_outer[0]]
    )
    mids = np.array(
        [
            0.5 * (region.x_outer[0] + region.x_outer[1]),
            0.5 * (region.y_outer[0] + region.y_outer[1]),
        ]
    )
    return np.pi / spans * (xy - mids)


def strictly_inside_outer(q, region: RegionSpec) -> bool:
    """True iff every robot is strictly inside the outer rectangle."""
    xy = _xy(q)
    return bool(
        np.all(xy[:, 0] > region.x_outer[0])
        and np.all(xy[:, 0] < region.x_outer[1])
        and np.all(xy[:, 1] > region.y_outer[0])
        and np.all(xy[:, 1] < region.y_outer[1])
    )


def penetration_depth(q, region: RegionSpec) -> float:
    """Largest distance by which any robot exceeds the outer rectangle (0 inside)."""
    xy = _xy(q)
    over = np.stack(
        [
            region.x_outer[0] - xy[:, 0],
            xy[:, 0] - region.x_outer[1],
            region.y_outer[0] - xy[:, 1],
            xy[:, 1] - region.y_outer[1],
        ]
    )
    return float(max(0.0, over.max()))


def region_active(q, region: RegionSpec, margin: float = 0.0) -> bool:
    """True when any robot is outside the (margin-shrunk) inner rectangle.

    margin > 0 is used by the optional hysteresis: while the channel is
    engaged, release requires every robot to be at least margin inside.
    """
    xy = _xy(q)
    inside = (
        np.all(xy[:, 0] >= region.x_inner[0] + margin)
        and np.all(xy[:, 0] <= region.x_inner[1] - margin)
        and np.all(xy[:, 1] >= region.y_inner[0] + margin)
        and np.all(xy[:, 1] <= region.y_inner[1] - margin)
    )
    return not bool(inside)


def _diffeo_blocks(q, region: RegionSpec) -> np.ndarray:
    xy = _xy(q)
    if not strictly_inside_outer(q, region):
        raise RegionDomainError(
            "robot position on or outside the outer rectangle; barrier undefined"
        )
    return np.tan(_angles(xy, region))


def _jacobian_blocks(q, region: RegionSpec) -> tuple[np.ndarray, np.ndarray]:
    """(xi, jac) per robot: jac[:, 0] = d xi_x/d x, jac[:, 1] = d xi_y/d y."""
    xi = _diffeo_blocks(q, region)
    spans = np.array(
        [region.x_outer[1] - region.x_outer[0], region.y_outer[1] - region.y_outer[0]]
    )
    jac = np.pi / spans * (1.0 + xi**2)  # sec^2 = 1 + tan^2
    return xi, jac


def _jacobian_rate_blocks(xi, jac, qdot, region: RegionSpec) -> np.ndarray:
    """Entries of d/dt (d phi/dq): 2 (pi/span) xi jac coord_dot, shape (k, 2)."""
    spans = np.array(
        [region.x_outer[1] - region.x_outer[0], region.y_outer[1] - region.y_outer[0]]
    )
    v = np.asarray(qdot, dtype=float).reshape(-1, 3)[:, :2]
    return 2.0 * np.pi / spans * xi * jac * v


def diffeo(q, region: RegionSpec) -> np.ndarray:
    """Barrier coordinates xi, flat (2(n+1),), ordered (x, y) per robot.

    Raises RegionDomainError if any robot is on or outside the outer
    rectangle.
    """
    return _diffeo_blocks(q, region).reshape(-1)


def diffeo_jacobian(q, region: RegionSpec) -> np.ndarray:
    """Jacobian d phi/d q, shape (2(n+1), 3(n+1)), block diagonal per robot.

    Each 2x3 block is [[d xi_x/dx, 0, 0], [0, d xi_y/dy, 0]]; the theta
    column is identically zero.
    """
    _, jac = _jacobian_blocks(q, region)
    k = jac.shape[0]
    J = np.zeros((2 * k, 3 * k))
    for i in range(k):
        J[2 * i, 3 * i] = jac[i, 0]
        J[2 * i + 1, 3 * i + 1] = jac[i, 1]
    return J


def _p2_matrix(jac, k: int) -> np.ndarray:
    """p2 = (d phi/dq)(Q x I3): per robot the scaled jacobian block tiled
    across every robot's x, y columns."""
    p2 = np.zeros((2 * k, 3 * k))
    for i in range(k):
        p2[2 * i, 0::3] = jac[i, 0] / k
        p2[2 * i + 1, 1::3] = jac[i, 1] / k
    return p2


def inequality_terms(q, qdot, topology, M, F, Fce, region: RegionSpec):
    """Decomposition xi'' = p1 + p2 r of the barrier acceleration.

    p1 collects everything independent of the free vector r:
    [d/dt (d phi/dq)] qdot + (d phi/dq)(M^-1 F + M^-1 Fce); p2 is the
    barrier-to-consensus coupling (d phi/dq)(Q x I3).

    Returns:
        (p1, p2): flat (2(n+1),) vector and (2(n+1), 3(n+1)) matrix.
    """
    k = topology.n + 1
    xi, jac = _jacobian_blocks(q, region)
    djac = _jacobian_rate_blocks(xi, jac, qdot, region)
    M = np.asarray(M, dtype=float)
    acc = np.linalg.solve(M, np.asarray(F, dtype=float) + np.asarray(Fce, dtype=float))
    acc = acc.reshape(k, 3)[:, :2]
    v = np.asarray(qdot, dtype=float).reshape(k, 3)[:, :2]
    p1 = (djac * v + jac * acc).reshape(-1)
    return p1, _p2_matrix(jac, k)


def r_star(xi, xidot, p1, p2, q, region: RegionSpec, active: bool | None = None) -> np.ndarray:
    """Switched barrier feedback.

    Zero while every robot is inside the inner rectangle; otherwise the
    least-squares solution of p2 r = -(p1 + gamma1 xi' + gamma2 xi), which
    enforces xi'' = -gamma1 xi' - gamma2 xi exactly whenever the right side
    lies in the range of p2.
    """
    k3 = np.asarray(p2).shape[1]
    if active is None:
        active = region_active(q, region)
    if not active:
        return np.zeros(k3)
    rhs = np.asarray(p1, dtype=float) + region.gamma1 * np.asarray(
        xidot, dtype=float
    ) + region.gamma2 * np.asarray(xi, dtype=float)
    sol, *_ = np.linalg.lstsq(np.asarray(p2, dtype=float), -rhs, rcond=PINV_RTOL)
    return sol


def region_force(M, r, topology: AugmentedTopology) -> np.ndarray:
    """Region-constraint force Fci = M (Q x I3) r.

    Lives in the null space of the formation constraint:
    (Lbar x I3) M^-1 Fci = 0, so the formation error dynamics are untouched.
    """
    k = topology.n + 1
    r_blocks = np.asarray(r, dtype=float).reshape(k, 3)
    mean = np.tile(r_blocks.mean(axis=0), k)
    return np.asarray(M, dtype=float) @ mean
