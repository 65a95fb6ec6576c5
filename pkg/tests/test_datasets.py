import numpy as np
import pytest

from robogest.datasets import (STREAM_HUMAN, STREAM_ROBOT, GenerationConfig, generate_human_set,
                               generate_robot_set, sample_seed, wrist_sway)
from robogest.digits import augmentation_grid, digit_template, minimum_jerk_peak_accel
from robogest.errors import PlanningFailed, ValidationError
from robogest.robot import MountRotation

SMALL = GenerationConfig(robot_levels=1, human_per_digit=1)


@pytest.fixture(scope="module")
def small_sets():
    return generate_robot_set(SMALL), generate_human_set(1, 0, SMALL)


def test_small_counts_and_labels(small_sets):
    robot, human = small_sets
    assert len(robot) == 10 and len(human) == 10
    assert sorted(s.label for s in robot) == list(range(10))
    assert sorted(s.label for s in human) == list(range(10))
    assert {s.provenance for s in robot} == {"robot"}
    assert {s.provenance for s in human} == {"human-like"}


def test_sample_ids_unique(small_sets):
    ids = [s.sample_id for s in small_sets[0] + small_sets[1]]
    assert len(set(ids)) == len(ids)


def test_robot_samples_carry_joint_plans(small_sets):
    robot, human = small_sets
    assert all(s.joints is not None and s.joints.rate_hz == 42.0 for s in robot)
    assert all(s.joints is None for s in human)


def test_channels_at_imu_rate(small_sets):
    for s in small_sets[0] + small_sets[1]:
        assert all(c.rate_hz == 100.0 for c in s.channels.values())
        assert len(s.channels["acceleration"]) == pytest.approx(100 * s.duration_s, abs=2)


def test_generation_deterministic(small_sets):
    again = generate_human_set(1, 0, SMALL)
    for a, b in zip(small_sets[1], again):
        np.testing.assert_array_equal(a.channels["acceleration"].data, b.channels["acceleration"].data)
    robot = generate_robot_set(GenerationConfig(robot_levels=1, digits=(3,)))
    np.testing.assert_array_equal(robot[0].channels["velocity"].data,
                                  small_sets[0][3].channels["velocity"].data)


def test_seed_changes_human_set(small_sets):
    other = generate_human_set(1, 1, SMALL)
    assert not np.array_equal(other[0].channels["acceleration"].data,
                              small_sets[1][0].channels["acceleration"].data)


def test_human_params_within_ranges():
    r = SMALL.ranges
    for s in generate_human_set(3, 4, SMALL):
        p = s.params
        assert r.speed[0] <= p.speed_scale <= r.speed[1] and r.size[0] <= p.size_scale <= r.size[1]
        assert r.wrist_angle_deg[0] <= p.wrist_angle_deg <= r.wrist_angle_deg[1]


def test_human_motion_acceleration_bounded():
    # Pen-path acceleration, without gravity, noise or sway, stays within 10x the min-jerk peak
    cfg = GenerationConfig(human_per_digit=2, human_noise_std=0.0, wrist_sway_deg=0.0, gravity_mps2=0.0)
    for s in generate_human_set(2, 0, cfg):
        acc = np.linalg.norm(s.channels["acceleration"].data, axis=0)
        assert acc.max() <= 10 * minimum_jerk_peak_accel(digit_template(s.label), s.params)


def test_per_sample_seeds_are_distinct():
    seeds = {sample_seed(0, stream, d, i) for stream in (STREAM_ROBOT, STREAM_HUMAN)
             for d in range(10) for i in range(81)}
    assert len(seeds) == 2 * 10 * 81


def test_wrist_sway_statistics():
    rng = np.random.default_rng(0)
    rv = wrist_sway(rng, 500, 100.0, 3.0, 1.0)
    assert rv.shape == (500, 3)
    np.testing.assert_allclose(np.degrees(rv.std(axis=0)), 3.0, rtol=1e-9)
    assert np.all(wrist_sway(rng, 50, 100.0, 0.0, 1.0) == 0)


def test_parallel_matches_serial():
    cfg = GenerationConfig(human_per_digit=2, digits=(1, 7))
    a = generate_human_set(2, 0, cfg)
    b = generate_human_set(2, 0, GenerationConfig(human_per_digit=2, digits=(1, 7), n_jobs=2))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.channels["trajectory"].data, y.channels["trajectory"].data)


def test_planning_failures_are_collected(monkeypatch, caplog):
    from robogest import datasets

    real = datasets.plan_joint_trajectory
    calls = []

    def flaky(model, traj, *a, **kw):
        calls.append(1)
        if len(calls) in (3, 6):
            raise PlanningFailed(7, "target outside reach")
        return real(model, traj, *a, **kw)

    monkeypatch.setattr(datasets, "plan_joint_trajectory", flaky)
    with pytest.raises(PlanningFailed, match="2 robot sample"):
        generate_robot_set(SMALL)
    assert sum("failed" in r.message for r in caplog.records) == 2


@pytest.mark.parametrize("kw", [{"digits": (1, 1)}, {"digits": (11,)}, {"human_per_digit": 0}])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        GenerationConfig(**kw)


def test_config_dict_round_trip():
    cfg = GenerationConfig(mount=MountRotation(10, 20, 30), seed=7)
    assert GenerationConfig.from_dict(cfg.to_dict()) == cfg


def test_full_grid_size():
    assert len(augmentation_grid(3)) * 10 == 810
