import json
import math

import numpy as np
import pytest

from radalloc import (
    Budgets, LayoutDistribution, PhysConst, Point2D, RadallocError, Scenario,
    ZeroDistance, distances, pathloss, random_scenario,
)


def tiny_scenario(tx, rx, targets, fc=1.0e9):
    m, q, n = len(tx), len(targets), len(rx)
    gains = np.ones((m, q, n), dtype=complex)
    return Scenario(transmitters=tx, receivers=rx, targets=targets,
                    gains=gains, consts=PhysConst(carrier_freq=fc))


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2D(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Point2D(0.0, float("inf"))


def test_physconst_positive():
    with pytest.raises(ValueError):
        PhysConst(carrier_freq=0.0)
    with pytest.raises(ValueError):
        PhysConst(noise_psd=-1e-20)


def test_distance_3_4_5():
    s = tiny_scenario([(0.0, 0.0)], [(6.0, 8.0)], [(3.0, 4.0)])
    d_tx, d_rx = distances(s)
    assert d_tx[0, 0] == pytest.approx(5.0)
    assert d_rx[0, 0] == pytest.approx(5.0)


def test_coincident_placement_rejected():
    with pytest.raises(ZeroDistance):
        tiny_scenario([(1.0, 1.0)], [(5.0, 5.0)], [(1.0, 1.0)])


def test_distances_match_recomputation():
    rng = np.random.default_rng(11)
    tx = [tuple(p) for p in rng.uniform(0, 1000, (4, 2))]
    rx = [tuple(p) for p in rng.uniform(0, 1000, (3, 2))]
    tg = [tuple(p) for p in rng.uniform(2000, 3000, (2, 2))]
    s = tiny_scenario(tx, rx, tg)
    d_tx, d_rx = distances(s)
    for m, (xm, ym) in enumerate(tx):
        for q, (xq, yq) in enumerate(tg):
            assert d_tx[m, q] == pytest.approx(math.hypot(xm - xq, ym - yq))
    for q, (xq, yq) in enumerate(tg):
        for n, (xn, yn) in enumerate(rx):
            assert d_rx[q, n] == pytest.approx(math.hypot(xq - xn, yq - yn))


def test_pathloss_unit_distances():
    # 1/(4 pi d_tx^2) * 1/(4 pi d_rx^2) * 1/(4 pi fc^2) at d=1, fc=1
    s = tiny_scenario([(0.0, 0.0)], [(2.0, 0.0)], [(1.0, 0.0)], fc=1.0)
    alpha = pathloss(s)
    assert alpha[0, 0, 0] == pytest.approx(5.039302255187421e-4, rel=1e-12)


def test_pathloss_inverse_square_in_tx_leg():
    near = tiny_scenario([(0.0, 0.0)], [(13.0, 0.0)], [(10.0, 0.0)], fc=1.0)
    far = tiny_scenario([(-10.0, 0.0)], [(13.0, 0.0)], [(10.0, 0.0)], fc=1.0)
    a_near = pathloss(near)[0, 0, 0]
    a_far = pathloss(far)[0, 0, 0]
    assert a_near / a_far == pytest.approx(4.0, rel=1e-12)


def test_pathloss_hand_value_5km_10km_1ghz():
    s = tiny_scenario([(0.0, 0.0)], [(5000.0, 10000.0)], [(5000.0, 0.0)],
                      fc=1.0e9)
    alpha = pathloss(s)
    assert alpha[0, 0, 0] == pytest.approx(2.0157209020749686e-37, rel=1e-12)


def test_pathloss_rigid_motion_invariant():
    rng = np.random.default_rng(5)
    tx = rng.uniform(0, 5000, (3, 2))
    rx = rng.uniform(0, 5000, (3, 2))
    tg = rng.uniform(6000, 9000, (2, 2))
    base = tiny_scenario([tuple(p) for p in tx], [tuple(p) for p in rx],
                         [tuple(p) for p in tg])
    theta = 0.7
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    shift = np.array([123.0, -456.0])
    moved = tiny_scenario([tuple(p @ rot.T + shift) for p in tx],
                          [tuple(p @ rot.T + shift) for p in rx],
                          [tuple(p @ rot.T + shift) for p in tg])
    assert np.allclose(pathloss(base), pathloss(moved), rtol=1e-12)


def test_scenario_gain_shape_checked():
    with pytest.raises(ValueError):
        Scenario(transmitters=[(0.0, 0.0)], receivers=[(2.0, 0.0)],
                 targets=[(1.0, 0.0)], gains=np.ones((2, 1, 1), dtype=complex),
                 consts=PhysConst())


def test_random_scenario_deterministic():
    cfg = LayoutDistribution(n_tx=3, n_rx=3, n_targets=2)
    a = random_scenario(cfg, 42)
    b = random_scenario(cfg, 42)
    assert a.to_dict() == b.to_dict()
    c = random_scenario(cfg, 43)
    assert a.to_dict() != c.to_dict()


def test_random_scenario_coordinate_mean():
    """Pooled sensor coordinates center on the area midpoint."""
    cfg = LayoutDistribution(n_tx=200, n_rx=200, n_targets=4)
    pts = []
    for seed in range(40):
        s = random_scenario(cfg, seed)
        pts.append(s.tx_xy)
        pts.append(s.rx_xy)
    coords = np.vstack(pts)
    center = cfg.area_side / 2.0
    assert abs(coords[:, 0].mean() - center) < 0.01 * center
    assert abs(coords[:, 1].mean() - center) < 0.01 * center


def test_random_scenario_gain_variance():
    cfg = LayoutDistribution(n_tx=100, n_rx=100, n_targets=4, gain_variance=10.0)
    s = random_scenario(cfg, 9)
    power = np.abs(s.gains) ** 2
    assert power.mean() == pytest.approx(10.0, rel=0.02)
    # split evenly between real and imaginary parts
    assert (s.gains.real ** 2).mean() == pytest.approx(5.0, rel=0.05)


def test_random_scenario_respects_min_separation():
    cfg = LayoutDistribution(area_side=50.0, n_tx=5, n_rx=5, n_targets=3,
                             min_separation=10.0)
    s = random_scenario(cfg, 1)
    d_tx, d_rx = distances(s)
    assert d_tx.min() >= 10.0
    assert d_rx.min() >= 10.0


def test_random_scenario_impossible_separation():
    cfg = LayoutDistribution(area_side=1.0, n_tx=2, n_rx=2, n_targets=1,
                             min_separation=5.0)
    with pytest.raises(RadallocError):
        random_scenario(cfg, 0)


def test_budgets_uniform_split():
    b = Budgets.uniform(10.0, 3.0e6, 5)
    assert b.per_tx_power == pytest.approx(2.0)
    assert b.per_tx_bandwidth == pytest.approx(0.6e6)
    with pytest.raises(ValueError):
        Budgets.uniform(-1.0, 3.0e6, 5)


def test_json_round_trip(tmp_path):
    cfg = LayoutDistribution(n_tx=3, n_rx=2, n_targets=2)
    s = random_scenario(cfg, 77)
    text = s.to_json()
    doc = json.loads(text)
    assert "consts" in doc and "gains" in doc
    back = Scenario.from_json(text)
    assert back.to_dict() == s.to_dict()

    path = tmp_path / "scene.json"
    path.write_text(text)
    from_file = Scenario.from_json(str(path))
    assert from_file.to_dict() == s.to_dict()
    assert np.allclose(from_file.gains, s.gains)
