"""Generalized Udwadia-Kalaba constrained-dynamics core.

For an unconstrained system M qddot = F subjected to an acceleration-level
equality constraint A qddot = b, the constraint force (with the weighting
matrix fixed to M^-2, which removes every matrix square root) is

    Fce = M A^+ (b - A M^-1 F)

An inequality channel acts through the null space of A without disturbing
the equality constraint:

    Fci = M (I - A^+ A) r

since A (I - A^+ A) = 0.  Baumgarte stabilization replaces a constraint
Psi = 0 by the stable ODE Psi'' + alpha Psi' + beta Psi = 0, which turns
off-constraint initial states into exponentially decaying violations.

All functions are pure; callers may memoize pseudoinverses of constant A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PINV_RTOL = 1e-9


@dataclass(frozen=True)
class EqualityConstraint:
    """Acceleration-level equality constraint A qddot = b.

    A has shape (s, N); b has length s.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or b.shape[0] != A.shape[0]:
            raise ValueError("constraint matrix and right-hand side are inconsistent")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def s(self) -> int:
        return self.A.shape[0]

    @property
    def N_dim(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class BaumgarteGains:
    """Stabilization gains: alpha [1/s], beta [1/s^2], both positive."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("Baumgarte gains must be positive")


def unconstrained_acceleration(M, F) -> np.ndarray:
    """a = M^-1 F via a linear solve (never an explicit inverse)."""
    return np.linalg.solve(np.asarray(M, dtype=float), np.asarray(F, dtype=float))


def equality_force(M, F, constraint: EqualityConstraint) -> np.ndarray:
    """Equality-constraint force Fce = M A^+ (b - A M^-1 F).

    Rank-deficient A is handled by the pseudoinverse (least-squares
    constraint satisfaction); when b - A a lies in the range of A the
    constrained acceleration satisfies A qddot = b exactly.
    """
    M = np.asarray(M, dtype=float)
    a = unconstrained_acceleration(M, F)
    resid = constraint.b - constraint.A @ a
    return M @ (np.linalg.pinv(constraint.A, rcond=PINV_RTOL) @ resid)


def nullspace_projector(A) -> np.ndarray:
    """Orthogonal projector I - A^+ A onto the null space of A."""
    A = np.asarray(A, dtype=float)
    return np.eye(A.shape[1]) - np.linalg.pinv(A, rcond=PINV_RTOL) @ A


def nullspace_force(M, constraint: EqualityConstraint, r) -> np.ndarray:
    """Inequality-channel force Fci = M (I - A^+ A) r.

    Satisfies A M^-1 Fci = 0: the channel never perturbs the equality
    constraint.
    """
    M = np.asarray(M, dtype=float)
    r = np.asarray(r, dtype=float).reshape(-1)
    return M @ (nullspace_projector(constraint.A) @ r)


def baumgarte_rhs(psi, psidot, kinematic_terms, gains: BaumgarteGains) -> np.ndarray:
    """Right-hand side b enforcing Psi'' = -alpha Psi' - beta Psi.

    The caller splits Psi'' = A qddot - kinematic_terms, supplying the
    qddot-independent part; then enforcing A qddot = b with

        b = kinematic_terms - alpha Psi' - beta Psi

    yields the stabilized constraint ODE.
    """
    psi = np.asarray(psi, dtype=float)
    psidot = np.asarray(psidot, dtype=float)
    kin = np.asarray(kinematic_terms, dtype=float)
    return kin - gains.alpha * psidot - gains.beta * psi
