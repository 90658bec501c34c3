import numpy as np
import pytest

from gukform.guk import (
    BaumgarteGains,
    EqualityConstraint,
    baumgarte_rhs,
    equality_force,
    nullspace_force,
    nullspace_projector,
    unconstrained_acceleration,
)
from gukform.robot import RobotParams, stacked_system


def test_unconstrained_acceleration_trivial():
    assert np.all(unconstrained_acceleration(np.eye(4), np.zeros(4)) == 0.0)
    f = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(unconstrained_acceleration(np.eye(3), f), f, atol=0)


def test_unconstrained_acceleration_robot_block(paper_config):
    q1 = np.asarray(paper_config.q0, float).reshape(-1, 3)[1]
    qd1 = np.asarray(paper_config.qdot0, float).reshape(-1, 3)[1]
    M, F = stacked_system(q1, qd1, [paper_config.params[1]])
    a = unconstrained_acceleration(M, F)
    assert np.linalg.norm(M @ a - F) <= 1e-12


def test_unconstrained_acceleration_singular_mass():
    with pytest.raises(np.linalg.LinAlgError):
        unconstrained_acceleration(np.zeros((2, 2)), np.ones(2))


def test_equality_force_zero_when_constraint_satisfied():
    rng = np.random.default_rng(1)
    M = np.eye(4) + 0.2 * rng.normal(size=(4, 4))
    F = rng.normal(size=4)
    A = rng.normal(size=(2, 4))
    a = np.linalg.solve(M, F)
    c = EqualityConstraint(A=A, b=A @ a)
    assert np.linalg.norm(equality_force(M, F, c)) <= 1e-12


def test_equality_force_identity_case():
    b = np.array([1.0, 2.0, 3.0])
    F = np.array([0.5, 0.0, -0.5])
    c = EqualityConstraint(A=np.eye(3), b=b)
    np.testing.assert_allclose(equality_force(np.eye(3), F, c), b - F, atol=1e-12)


def test_equality_force_enforces_constraint_random():
    rng = np.random.default_rng(9)
    for _ in range(100):
        N = int(rng.integers(3, 9))
        s = int(rng.integers(1, N))
        M = np.eye(N) + 0.3 * rng.normal(size=(N, N))
        F = rng.normal(size=N)
        A = rng.normal(size=(s, N))
        b = rng.normal(size=s)
        c = EqualityConstraint(A=A, b=b)
        fce = equality_force(M, F, c)
        qdd = np.linalg.solve(M, F + fce)
        assert np.linalg.norm(A @ qdd - b) <= 1e-9


def test_nullspace_force_trivial_cases():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(2, 5))
    M = np.eye(5)
    c = EqualityConstraint(A=A, b=np.zeros(2))
    assert np.all(nullspace_force(M, c, np.zeros(5)) == 0.0)
    # square full-rank A has an empty null space
    Asq = rng.normal(size=(4, 4)) + 4.0 * np.eye(4)
    csq = EqualityConstraint(A=Asq, b=np.zeros(4))
    assert np.linalg.norm(nullspace_force(np.eye(4), csq, rng.normal(size=4))) <= 1e-9


def test_nullspace_force_laplacian_kernel(paper_topology):
    A = np.kron(paper_topology.augmented_laplacian, np.eye(3))
    c = EqualityConstraint(A=A, b=np.zeros(15))
    rng = np.random.default_rng(6)
    r = rng.normal(size=15)
    fci = nullspace_force(np.eye(15), c, r)
    assert np.linalg.norm(A @ fci) <= 1e-9


def test_nullspace_never_perturbs_equality_channel():
    rng = np.random.default_rng(13)
    for _ in range(50):
        N = int(rng.integers(3, 8))
        s = int(rng.integers(1, N))
        M = np.eye(N) + 0.25 * rng.normal(size=(N, N))
        F = rng.normal(size=N)
        A = rng.normal(size=(s, N))
        c = EqualityConstraint(A=A, b=rng.normal(size=s))
        fce = equality_force(M, F, c)
        fci = nullspace_force(M, c, rng.normal(size=N))
        both = A @ np.linalg.solve(M, fce + fci)
        alone = A @ np.linalg.solve(M, fce)
        assert np.linalg.norm(both - alone) <= 1e-9


def test_nullspace_projector_idempotent():
    rng = np.random.default_rng(14)
    for _ in range(30):
        A = rng.normal(size=(int(rng.integers(1, 5)), int(rng.integers(5, 9))))
        Pn = nullspace_projector(A)
        assert np.linalg.norm(Pn @ Pn - Pn) <= 1e-10


def test_baumgarte_rhs_on_constraint():
    gains = BaumgarteGains(alpha=3.0, beta=2.0)
    kin = np.array([0.4, -0.2])
    np.testing.assert_allclose(
        baumgarte_rhs(np.zeros(2), np.zeros(2), kin, gains), kin, atol=0
    )


def test_baumgarte_rhs_scalar_example():
    gains = BaumgarteGains(alpha=4.0, beta=0.5)
    b = baumgarte_rhs(np.array([1.0]), np.array([0.0]), np.array([0.0]), gains)
    assert b[0] == pytest.approx(-0.5, abs=0)


def test_baumgarte_gains_positive():
    with pytest.raises(ValueError):
        BaumgarteGains(alpha=0.0, beta=1.0)
    with pytest.raises(ValueError):
        BaumgarteGains(alpha=1.0, beta=0.0)


@pytest.mark.parametrize("alpha, beta", [(2.0, 1.0), (4.0, 4.0), (1.0, 0.25)])
def test_baumgarte_decay_envelope(alpha, beta):
    # scalar system psi'' = -alpha psi' - beta psi from (1, 0), integrated
    # with a small independent Runge-Kutta loop
    horizon = 20.0 / min(alpha, 2.0 * beta / alpha)
    dt = 1e-3
    y = np.array([1.0, 0.0])

    def f(y):
        return np.array([y[1], -alpha * y[1] - beta * y[0]])

    steps = int(round(horizon / dt))
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert abs(y[0]) < 1e-6


def test_constraint_shape_validation():
    with pytest.raises(ValueError):
        EqualityConstraint(A=np.zeros((2, 3)), b=np.zeros(3))
