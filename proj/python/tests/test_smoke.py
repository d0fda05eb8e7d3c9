import math

import numpy as np
import pytest

import weldplan as wp


@pytest.fixture(scope="module")
def cell():
    return wp.load_workcell(str(wp.default_config()))


def test_transform_round_trip():
    t = wp.Transform.from_euler(0.3, -0.2, 0.1, [10.0, -5.0, 2.0])
    yaw, pitch, roll = t.euler()
    assert (yaw, pitch, roll) == pytest.approx((0.3, -0.2, 0.1), abs=1e-12)
    ident = t * t.inverse()
    assert np.allclose(ident.matrix(), np.eye(4), atol=1e-12)
    pts = np.array([[1.0, 2.0, 3.0], [-4.0, 0.0, 1.0]])
    back = t.inverse().apply(t.apply(pts))
    assert np.allclose(back, pts, atol=1e-12)


def test_fk_and_jacobian_agree_with_differences():
    chain = wp.reference_chain()
    q = np.array([0.1, -0.3, 0.4, 0.2, 0.7, -0.5])
    j = wp.jacobian(chain, q)
    h = 1e-6
    for i in range(6):
        dq = np.zeros(6)
        dq[i] = h
        dp = (wp.fk(chain, q + dq).translation - wp.fk(chain, q - dq).translation) / (2 * h)
        assert np.allclose(dp, j[:3, i], rtol=1e-4, atol=1e-4)


def test_ik_recovers_a_reachable_pose():
    chain = wp.reference_chain()
    q = np.array([0.2, 0.1, 0.3, -0.4, 0.8, 0.3])
    r = wp.ik(chain, wp.fk(chain, q), q + 0.05)
    assert r["success"]
    assert r["position_error"] <= 0.5
    for err, raw, _ in r["log"]:
        assert raw <= err / (2 * 0.05) + 1e-12
    with pytest.raises(ValueError):
        wp.ik(chain, wp.fk(chain, q), q, method="newton")


def test_cost_helpers():
    a = np.array([1.0, 0.0, 0.0, 0.0])
    assert wp.quaternion_distance(a, -a) == 0.0
    assert wp.quaternion_distance(a, np.array([0.0, 1.0, 0.0, 0.0])) == pytest.approx(math.sqrt(2))
    path = np.array([np.zeros(6), np.r_[1.0, np.zeros(5)]])
    assert wp.path_length(path) == pytest.approx(1.0)
    assert wp.integral_cost(path, lambda q: 2.0, 10) == pytest.approx(2.0)
    assert wp.acceptance_probability(1.0, 2.0, 1.0, 10.0) == pytest.approx(math.exp(-1.0))
    assert wp.acceptance_probability(2.0, 1.0, 1e-9) == 1.0


def test_workcell_and_planning(cell):
    assert cell.goals == ["goal1", "goal2"]
    assert "bitrrt" in wp.planner_names()
    assert not cell.in_collision(cell.home)
    r = wp.plan(cell, "bitrrt", "goal2")
    assert r["success"]
    path = r["path"]
    assert path.shape[1] == 6
    assert np.allclose(path[0], cell.goal_q("goal1"))
    assert np.allclose(path[-1], cell.goal_q("goal2"))
    assert cell.path_valid(path)
    assert r["ic_pos"] > 0.0
    again = wp.plan(cell, "bitrrt", "goal2")
    assert np.array_equal(again["path"], path)
    with pytest.raises(ValueError):
        wp.plan(cell, "astar", "goal1")


def test_registration_recovers_an_offset(cell):
    cad = wp.cad_cloud(cell)
    offset = wp.Transform.from_euler(math.radians(2.0), translation=[40.0, -25.0, 0.0])
    sensor = wp.sensor_cloud(cell, offset, seed=3)
    r = wp.register_workpiece(cell, sensor, cad)
    assert np.linalg.norm(r["workpiece_offset"].translation - [40.0, -25.0, 0.0]) < 5.0
    assert wp.rotation_distance(r["workpiece_offset"], offset) < math.radians(1.0)


def test_errors():
    with pytest.raises(wp.Error):
        wp.load_workcell("/nonexistent/config.yaml")
    with pytest.raises(wp.NoCorrespondences):
        wp.icp(np.zeros((5, 3)), np.full((5, 3), 1e4), cutoff=1.0)
    kept, mag = wp.don_filter(np.random.default_rng(0).uniform(0, 10, (50, 3)), 5.0, 20.0, 0.1)
    assert len(kept) == 50 and len(mag) == 50
