import numpy as np
import pytest

from gukform.robot import (
    P,
    RobotParams,
    drift_force,
    input_map,
    mass_matrix,
    nonholonomic_slip,
    stacked_blocks,
    stacked_system,
)

TABLE_PARAMS = RobotParams(m=1.0, J=1.0, l=0.1, d=0.05)


def test_mass_matrix_theta_zero():
    M = mass_matrix([0.0, 0.0, 0.0], TABLE_PARAMS)
    np.testing.assert_allclose(
        M, [[0.05, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, -1.0, 0.0]], atol=1e-15
    )


def test_mass_matrix_theta_half_pi():
    M = mass_matrix([0.0, 0.0, np.pi / 2], TABLE_PARAMS)
    np.testing.assert_allclose(
        M, [[0.0, 0.05, 0.0], [0.0, 0.0, 0.5], [1.0, 0.0, 0.0]], atol=1e-15
    )


def test_mass_matrix_determinant():
    # det M = m J d^2 / l for every heading
    rng = np.random.default_rng(2)
    expected = TABLE_PARAMS.m * TABLE_PARAMS.J * TABLE_PARAMS.d**2 / TABLE_PARAMS.l
    assert expected == pytest.approx(0.025)
    for theta in rng.uniform(-10, 10, 200):
        det = np.linalg.det(mass_matrix([0.0, 0.0, theta], TABLE_PARAMS))
        assert det == pytest.approx(expected, rel=1e-12)


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        RobotParams(m=0.0)
    with pytest.raises(ValueError):
        RobotParams(l=-0.1)


def test_drift_force_zero_velocity():
    assert np.all(drift_force([1.0, 2.0, 0.7], [0.0, 0.0, 0.0], TABLE_PARAMS) == 0.0)


def test_drift_force_table_rows():
    # robot 1 initial state: theta=0, xd=2, yd=0, thd=0.2
    f1 = drift_force([0.0, 0.0, 0.0], [2.0, 0.0, 0.2], TABLE_PARAMS)
    np.testing.assert_allclose(f1, [0.0, 0.0, -0.4], atol=1e-15)
    # robot 2 initial state: theta=pi/2, xd=0, yd=2, thd=0.8
    f2 = drift_force([0.0, 0.0, np.pi / 2], [0.0, 2.0, 0.8], TABLE_PARAMS)
    np.testing.assert_allclose(f2, [0.0, 0.0, -1.6], atol=1e-15)


def test_drift_force_bilinear_in_rates():
    rng = np.random.default_rng(8)
    q = [0.3, -1.0, 0.9]
    qd = rng.normal(size=3)
    base = drift_force(q, qd, TABLE_PARAMS)
    scaled_th = drift_force(q, [qd[0], qd[1], 3.0 * qd[2]], TABLE_PARAMS)
    np.testing.assert_allclose(scaled_th, 3.0 * base, atol=1e-12)
    scaled_xy = drift_force(q, [2.0 * qd[0], 2.0 * qd[1], qd[2]], TABLE_PARAMS)
    np.testing.assert_allclose(scaled_xy, 2.0 * base, atol=1e-12)


def test_input_map_pseudoinverse():
    P_, P_pinv = input_map()
    np.testing.assert_allclose(P_pinv, [[0.5, 0.5, 0.0], [0.5, -0.5, 0.0]], atol=0)
    np.testing.assert_allclose(P_pinv @ P_, np.eye(2), atol=1e-15)
    # range of P: first two components reproduced, third annihilated
    np.testing.assert_allclose(P_ @ P_pinv @ [3.0, -1.0, 0.0], [3.0, -1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(P_ @ P_pinv @ [0.0, 0.0, 7.0], [0.0, 0.0, 0.0], atol=1e-15)
    # independent oracle
    np.testing.assert_allclose(np.linalg.pinv(P), P_pinv, atol=1e-14)


def test_stacked_single_robot_at_rest():
    M, F = stacked_system([1.0, 2.0, 0.4], [0.0, 0.0, 0.0], [TABLE_PARAMS])
    np.testing.assert_allclose(M, mass_matrix([1.0, 2.0, 0.4], TABLE_PARAMS), atol=0)
    assert np.all(F == 0.0)


def test_stacked_paper_scenario_determinant(paper_config):
    M, _ = stacked_system(paper_config.q0, paper_config.qdot0, paper_config.params)
    assert M.shape == (15, 15)
    assert np.linalg.det(M) == pytest.approx(0.025**5, rel=1e-9)


def test_stacked_identical_headings_share_blocks():
    q = np.tile([0.0, 0.0, 1.1], 3).reshape(3, 3)
    qd = np.zeros((3, 3))
    Mb, _ = stacked_blocks(q, qd, [TABLE_PARAMS] * 3)
    np.testing.assert_allclose(Mb[0], Mb[1], atol=0)
    np.testing.assert_allclose(Mb[0], Mb[2], atol=0)


def test_stacked_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        stacked_blocks(np.zeros((2, 3)), np.zeros((2, 3)), [TABLE_PARAMS])


def test_mass_matrix_solve_property():
    rng = np.random.default_rng(21)
    ident = np.eye(3)
    for theta in rng.uniform(-np.pi, np.pi, 1000):
        M = mass_matrix([0.0, 0.0, theta], TABLE_PARAMS)
        Minv = np.linalg.solve(M, ident)
        assert np.linalg.norm(M @ Minv - ident) <= 1e-10


def test_initial_states_satisfy_rolling_constraint(paper_config):
    slip = nonholonomic_slip(paper_config.q0, paper_config.qdot0)
    assert np.abs(slip).max() <= 1e-12
