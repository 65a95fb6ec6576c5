import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from robogest.digits import CartesianTrajectory
from robogest.errors import JointLimit, PlanningFailed, Unreachable, ValidationError
from robogest.robot import (DEFAULT_HOME, JointTrajectory, MountRotation, Pose, computed_max_reach, fk,
                            fk_batch, fk_jacobian, fk_matrix, ik, irb120_model, orientation_error,
                            plan_joint_trajectory, replay, resample_path, tool_orientation)


@pytest.fixture(scope="module")
def model():
    return irb120_model()


# Datasheet DH table, written out independently of the package
DH = [(0.0, -np.pi / 2, 0.290, 0.0), (0.270, 0.0, 0.0, -np.pi / 2), (0.070, -np.pi / 2, 0.0, 0.0),
      (0.0, np.pi / 2, 0.302, 0.0), (0.0, -np.pi / 2, 0.0, 0.0), (0.0, 0.0, 0.072, 0.0)]


def rot(axis, th):
    c, s = np.cos(th), np.sin(th)
    R = np.eye(4)
    i, j = {"x": (1, 2), "z": (0, 1)}[axis]
    R[i, i], R[i, j], R[j, i], R[j, j] = c, -s, s, c
    return R


def trans(x=0.0, y=0.0, z=0.0):
    T = np.eye(4)
    T[:3, 3] = (x, y, z)
    return T


def oracle_fk(q):
    T = np.eye(4)
    for (a, alpha, d, off), qi in zip(DH, q):
        T = T @ rot("z", qi + off) @ trans(z=d) @ trans(x=a) @ rot("x", alpha)
    return T


def random_q(rng, model, n, margin=0.05):
    lo, hi = model.joint_limits[:, 0] + margin, model.joint_limits[:, 1] - margin
    return rng.uniform(lo, hi, size=(n, 6))


# -- model ---------------------------------------------------------------------

def test_model_shape(model):
    assert model.dh_rows.shape == (6, 4)
    assert model.max_reach_m == 0.58


def test_joint1_limits_symmetric(model):
    np.testing.assert_allclose(np.degrees(model.joint_limits[0]), [-165, 165])


def test_model_validation():
    with pytest.raises(ValidationError):
        from robogest.robot import RobotModel
        RobotModel(np.zeros((5, 4)), np.tile([-1.0, 1.0], (6, 1)), 1.0)


def test_home_pose(model):
    p = fk(model, np.zeros(6))
    np.testing.assert_allclose(p.position, oracle_fk(np.zeros(6))[:3, 3], atol=1e-12)
    # Wrist centre 0.302 m forward, 0.630 m up; flange 0.072 m beyond it
    np.testing.assert_allclose(p.position, [0.374, 0.0, 0.630], atol=1e-12)


def test_computed_reach_near_datasheet(model):
    assert abs(computed_max_reach(model) - 0.58) <= 0.05 * 0.58


# -- forward kinematics ----------------------------------------------------------

def test_fk_matches_matrix_chain(model):
    rng = np.random.default_rng(0)
    for q in random_q(rng, model, 50):
        T = oracle_fk(q)
        p = fk(model, q)
        np.testing.assert_allclose(p.position, T[:3, 3], atol=1e-12)
        np.testing.assert_allclose(p.rotation, T[:3, :3], atol=1e-12)


def test_fk_batch_matches_scalar(model):
    qs = random_q(np.random.default_rng(1), model, 20)
    pos, R = fk_batch(model, qs)
    for k, q in enumerate(qs):
        T = fk_matrix(model, q)
        np.testing.assert_allclose(pos[k], T[:3, 3], atol=1e-12)
        np.testing.assert_allclose(R[k], T[:3, :3], atol=1e-12)


@pytest.mark.parametrize("theta", [0.3, -1.2, 2.5])
def test_joint1_rotates_about_base_z(model, theta):
    home = fk(model, np.zeros(6)).position
    q = np.zeros(6)
    q[0] = theta
    Rz = Rotation.from_euler("z", theta).as_matrix()
    np.testing.assert_allclose(fk(model, q).position, Rz @ home, atol=1e-12)


@pytest.mark.parametrize("j", range(6))
def test_fk_periodic(model, j):
    q = random_q(np.random.default_rng(j), model, 1)[0]
    q2 = q.copy()
    q2[j] += 2 * np.pi
    np.testing.assert_allclose(fk_matrix(model, q2), fk_matrix(model, q), atol=1e-12)


def test_fk_rejects_out_of_limits(model):
    q = np.zeros(6)
    q[0] = np.radians(170)
    with pytest.raises(JointLimit):
        fk(model, q)


def test_pose_quaternion_unit(model):
    q = random_q(np.random.default_rng(3), model, 1)[0]
    assert np.linalg.norm(fk(model, q).orientation) == pytest.approx(1.0, abs=1e-12)


def test_jacobian_matches_finite_differences(model):
    q = random_q(np.random.default_rng(4), model, 1)[0]
    T, J = fk_jacobian(model, q)
    h = 1e-6
    for j in range(6):
        dq = np.zeros(6)
        dq[j] = h
        Tp, Tm = fk_matrix(model, q + dq), fk_matrix(model, q - dq)
        np.testing.assert_allclose(J[:3, j], (Tp[:3, 3] - Tm[:3, 3]) / (2 * h), atol=1e-7)
        w = Rotation.from_matrix(Tp[:3, :3] @ Tm[:3, :3].T).as_rotvec() / (2 * h)
        np.testing.assert_allclose(J[3:, j], w, atol=1e-7)


# -- inverse kinematics ----------------------------------------------------------

def test_ik_fixed_point(model):
    q = random_q(np.random.default_rng(5), model, 1)[0]
    np.testing.assert_allclose(ik(model, fk(model, q), q), q, atol=1e-9)


def test_ik_round_trip_sample(model):
    rng = np.random.default_rng(6)
    ok = 0
    qs = random_q(rng, model, 100)
    for q in qs:
        seed = q + rng.normal(0, 0.05, 6)
        target = fk(model, q)
        try:
            sol = ik(model, target, seed)
        except Exception:
            continue
        got = fk(model, sol)
        if (np.linalg.norm(got.position - target.position) < 1e-4
                and orientation_error(target.rotation, got.rotation) < 1e-3):
            ok += 1
    assert ok >= 99


def test_ik_unreachable(model):
    with pytest.raises(Unreachable):
        ik(model, Pose([1.0, 0.0, 0.0], [0, 0, 0, 1]), np.zeros(6))


# -- orientation and planning -------------------------------------------------------

def test_mount_defaults():
    m = MountRotation()
    assert (m.rx_deg, m.ry_deg, m.rz_deg) == (20.0, 60.0, 5.0)


def test_mount_composition_order():
    # Intrinsic Y, then Z, then X equals the product of elementary rotations in that order
    m = MountRotation().as_matrix()
    ry = Rotation.from_euler("y", 60, degrees=True).as_matrix()
    rz = Rotation.from_euler("z", 5, degrees=True).as_matrix()
    rx = Rotation.from_euler("x", 20, degrees=True).as_matrix()
    np.testing.assert_allclose(m, ry @ rz @ rx, atol=1e-12)


def test_mount_range():
    with pytest.raises(ValidationError):
        MountRotation(rx_deg=200)


def line_traj(length=0.02, n=400):
    s = np.linspace(0, 1, n)[:, None]
    a = np.array([0.38, -length / 2, 0.40])
    b = np.array([0.38, length / 2, 0.40])
    return CartesianTrajectory(a + s * (b - a), 200.0)


def test_plan_frame_count(model):
    from robogest.digits import digit_template, synthesize_trajectory
    traj = synthesize_trajectory(digit_template(2))
    assert len(traj) == 600
    jt = plan_joint_trajectory(model, traj, MountRotation(), 42.0)
    assert len(jt) == 126


def test_plan_straight_line(model):
    jt = plan_joint_trajectory(model, line_traj(), MountRotation(), 42.0)
    for q in jt.frames:
        assert model.within_limits(q)
    assert jt.max_step() < 0.05
    pos, _ = fk_batch(model, jt.frames)
    np.testing.assert_allclose(pos[:, 0], 0.38, atol=1e-5)


def test_mount_changes_orientation_by_constant_rotation(model):
    traj = line_traj()
    # Without the mount tilt the default home sits on the wrong wrist branch; start from zero
    a = plan_joint_trajectory(model, traj, MountRotation(0, 0, 0), 42.0, home=np.zeros(6))
    b = plan_joint_trajectory(model, traj, MountRotation(), 42.0)
    _, Ra = fk_batch(model, a.frames)
    _, Rb = fk_batch(model, b.frames)
    M = MountRotation().as_matrix()
    for ra, rb in zip(Ra, Rb):
        assert orientation_error(ra @ M, rb) < 1e-6


def test_wrist_angle_is_roll_about_tool_axis(model):
    R0 = tool_orientation(model, MountRotation(), 0.0)
    R1 = tool_orientation(model, MountRotation(), 15.0)
    np.testing.assert_allclose(R0[:, 2], R1[:, 2], atol=1e-12)
    assert orientation_error(R0, R1) == pytest.approx(np.radians(15.0))


def test_plan_unreachable_reports_index(model):
    s = np.linspace(0, 1, 400)[:, None]
    pts = np.array([0.38, 0.0, 0.40]) + s * np.array([0.35, 0.0, 0.0])
    with pytest.raises(PlanningFailed) as info:
        plan_joint_trajectory(model, CartesianTrajectory(pts, 200.0), MountRotation(), 42.0)
    assert info.value.index > 0


def test_joint_trajectory_csv(model):
    jt = JointTrajectory(np.tile(DEFAULT_HOME, (3, 1)), 42.0)
    lines = jt.to_csv().splitlines()
    assert lines[0] == "t_s,j1,j2,j3,j4,j5,j6"
    assert len(lines) == 4


def test_joint_trajectory_validate(model):
    frames = np.tile(DEFAULT_HOME, (3, 1))
    frames[2, 0] += 0.3
    with pytest.raises(ValidationError):
        JointTrajectory(frames).validate(model)


# -- path resampling -------------------------------------------------------------------

def test_resample_path_endpoints_and_line():
    pts = np.linspace([0, 0, 0], [1, 2, 3], 600)
    out = resample_path(pts, 126)
    # Output sample k sits at input index k * 600 / 126 (same timing as the signal resampler)
    frac = np.arange(126) * (600 / 126) / 599
    ref = frac[:, None] * np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(out[0], pts[0], atol=1e-12)
    np.testing.assert_allclose(out, ref, atol=1e-9)


# -- replay ------------------------------------------------------------------------

def test_replay_constant(model):
    jt = JointTrajectory(np.tile(DEFAULT_HOME, (126, 1)), 42.0)
    track = replay(model, jt, 100.0)
    assert len(track) == 300
    np.testing.assert_allclose(track.positions, np.broadcast_to(track.positions[0], (300, 3)), atol=1e-12)
    np.testing.assert_allclose(track.rotations, track.rotations[:1].repeat(300, 0), atol=1e-12)


def test_replay_velocity_matches_jacobian(model):
    # Slow linear ramp on joints 1 and 2: finite-difference velocity vs J qdot
    rate = 42.0
    n = 126
    qdot = np.array([0.1, 0.05, 0.0, 0.0, 0.0, 0.0])
    frames = DEFAULT_HOME + np.arange(n)[:, None] / rate * qdot
    track = replay(model, JointTrajectory(frames, rate), 100.0)
    vel = np.gradient(track.positions, 1 / 100.0, axis=0)
    t = np.arange(len(track)) / 100.0
    for k in range(10, len(track) - 10, 25):
        _, J = fk_jacobian(model, DEFAULT_HOME + t[k] * qdot)
        v = J[:3] @ qdot
        assert np.linalg.norm(vel[k] - v) <= 0.05 * np.linalg.norm(v)


def test_replay_tracks_cartesian_path(model):
    from robogest.digits import digit_template, synthesize_trajectory
    traj = synthesize_trajectory(digit_template(5))
    jt = plan_joint_trajectory(model, traj, MountRotation(), 42.0)
    track = replay(model, jt, 100.0)
    ref = resample_path(traj.points, len(track))
    assert np.sqrt(np.mean(np.sum((track.positions - ref) ** 2, axis=1))) < 1e-3

