"""Closed-form capacity chain: values frozen from 60-digit arbitrary-precision
evaluations (erfc-based normal CDF), plus structural invariants."""

import math

import numpy as np
import pytest

from cicap.analytics import (
    CapacityReport,
    ClearanceModel,
    DegenerateStateError,
    Policy,
    RoadConfig,
    SURFACE_HEADER,
    TrafficState,
    abnormal_weight,
    cic,
    cic_surface,
    clearance_time,
    collision_probability,
    collision_rate,
    full_capacity,
    jam_shockwave,
    log10_collision_probability,
    occupancy_from_balance,
    read_surface_csv,
    shockwave_speed,
    write_surface_csv,
)

V50 = 50.0 / 3.6
BASE = Policy(v=V50, eta=1.5)
ROAD = RoadConfig()  # L=5000, tau=0.1, linear clearance model


# --- collision probability --------------------------------------------------


def test_collision_probability_frozen_tail():
    # z = (5 - v*eta)/(v*0.05*sqrt(1.5)) = -18.616122045152154
    p = collision_probability(BASE, 5.0, 0.05)
    assert p == pytest.approx(1.1891284777522184e-77, rel=1e-9)


def test_log10_collision_probability_frozen():
    lg = log10_collision_probability(BASE, 5.0, 0.05)
    assert lg == pytest.approx(-76.924771220095806, rel=1e-12)


def test_collision_probability_unit_z_case():
    # (20 km/h, eta=1.0, l=5, sigma_o=0.1) puts the threshold exactly one
    # standard deviation below the mean: p = Phi(-1)
    p = collision_probability(Policy(v=20 / 3.6, eta=1.0), 5.0, 0.1)
    assert p == pytest.approx(0.15865525393145705, rel=1e-12)


def test_collision_probability_above_half_when_mean_below_l():
    # (10 km/h, eta=1.5): v*eta = 25/6 m < l, z = +sqrt(6)
    p = collision_probability(Policy(v=10 / 3.6, eta=1.5), 5.0, 0.1)
    assert p == pytest.approx(0.99284706078228518, rel=1e-12)


def test_collision_probability_zero_noise_step():
    assert collision_probability(Policy(v=V50, eta=1.5), 5.0, 0.0) == 0.0
    assert collision_probability(Policy(v=1.0, eta=1.0), 5.0, 0.0) == 1.0
    assert collision_probability(Policy(v=1.0, eta=5.0), 5.0, 0.0) == 0.5


def test_collision_probability_monotone_in_eta_and_sigma():
    ps = [collision_probability(Policy(v=V50, eta=e), 5.0, 0.05) for e in (1.0, 1.5, 2.0)]
    assert ps[0] > ps[1] > ps[2]
    qs = [collision_probability(BASE, 5.0, s) for s in (0.02, 0.05, 0.1)]
    assert qs[0] < qs[1] < qs[2]


def test_collision_probability_validates_inputs():
    with pytest.raises(ValueError):
        collision_probability(BASE, 0.0, 0.05)
    with pytest.raises(ValueError):
        collision_probability(BASE, 5.0, -0.1)
    with pytest.raises(ValueError):
        log10_collision_probability(BASE, 5.0, 0.0)


def test_policy_validation():
    with pytest.raises(ValueError):
        Policy(v=0.0, eta=1.5)
    with pytest.raises(ValueError):
        Policy(v=V50, eta=0.0)


# --- aggregation chain -------------------------------------------------------


def test_collision_rate_is_pair_count_times_p():
    p = collision_probability(BASE, 5.0, 0.05)
    P = collision_rate(BASE, ROAD, 5.0, 0.05)
    assert ROAD.L / (V50 * 1.5) == pytest.approx(240.0, rel=1e-12)
    assert P == pytest.approx(240.0 * p, rel=1e-12)


def test_full_capacity():
    assert full_capacity(BASE) == pytest.approx(1.0 / 1.5, rel=1e-15)


def test_clearance_model_linear_clamps():
    m = ClearanceModel.linear()
    assert m(0.0) == 1800.0
    assert m(120.0 / 3.6) == pytest.approx(3600.0, rel=1e-12)
    assert m(200.0 / 3.6) == 3600.0  # clamped at the top
    assert m(V50) == pytest.approx(1800.0 + 1800.0 * V50 / (120.0 / 3.6), rel=1e-12)


def test_clearance_model_fixed():
    m = ClearanceModel.fixed(2700.0)
    assert m(1.0) == 2700.0 == m(100.0)
    with pytest.raises(ValueError):
        ClearanceModel.fixed(0.0)
    with pytest.raises(ValueError):
        ClearanceModel(kind="quadratic")


def test_abnormal_weight_formula():
    # lambda = 1/(1 + tau/(T P)); with sigma_o = 0.2 the probability is large
    # enough to matter
    lam = abnormal_weight(BASE, ROAD, 5.0, 0.2)
    P = collision_rate(BASE, ROAD, 5.0, 0.2)
    T = clearance_time(ROAD, V50)
    assert lam == pytest.approx(1.0 / (1.0 + ROAD.tau / (T * P)), rel=1e-12)
    assert abnormal_weight(BASE, ROAD, 5.0, 0.0) == 0.0


def test_occupancy_from_balance_matches_closed_form():
    for P, T, tau in ((0.5, 2700.0, 0.1), (1e-3, 1800.0, 0.1), (1.0, 3600.0, 0.5)):
        lam = 1.0 / (1.0 + tau / (T * P))
        assert occupancy_from_balance(P, T, tau) == pytest.approx(lam, rel=1e-10)
    assert occupancy_from_balance(0.0, 2700.0, 0.1) == 0.0
    with pytest.raises(ValueError):
        occupancy_from_balance(-0.1, 2700.0, 0.1)


def test_lambda_frozen_at_half_probability():
    assert occupancy_from_balance(0.5, 2700.0, 0.1) == pytest.approx(
        0.99992593141248796, rel=1e-12
    )


# --- shock waves -------------------------------------------------------------


def test_shockwave_speed_basic():
    c = shockwave_speed(TrafficState(q=0.5, rho=0.02), TrafficState(q=0.0, rho=0.2))
    assert c == pytest.approx(0.5 / (0.02 - 0.2), rel=1e-12)
    with pytest.raises(DegenerateStateError):
        shockwave_speed(TrafficState(q=0.5, rho=0.1), TrafficState(q=0.2, rho=0.1))


def test_jam_shockwave_frozen():
    # (1/eta)/(1/(v eta) - 1/l) at 50 km/h, eta=1.5, l=5 reduces to -250/57
    c = jam_shockwave(BASE, 5.0)
    assert c == pytest.approx(-250.0 / 57.0, rel=1e-14)
    assert c < 0.0  # the jam interface moves upstream


def test_jam_shockwave_magnitude_identity():
    # |c| = v*l/(v*eta - l) whenever v*eta > l
    for v, eta, l in ((V50, 1.5, 5.0), (60 / 3.6, 2.0, 4.0), (10.0, 1.0, 5.0)):
        c = jam_shockwave(Policy(v=v, eta=eta), l)
        assert abs(c) == pytest.approx(v * l / (v * eta - l), rel=1e-12)


# --- the full report ---------------------------------------------------------


def test_cic_chain_consistency():
    r = cic(BASE, ROAD, 5.0, 0.2)
    p = collision_probability(BASE, 5.0, 0.2)
    assert r.p == pytest.approx(p, rel=1e-12)
    assert r.P == pytest.approx(240.0 * p, rel=1e-12)
    assert r.s_plus == pytest.approx(1.0 / 1.5, rel=1e-12)
    # s = s_plus/(1 + (T/tau) P) and lam = 1 - s/s_plus
    T = clearance_time(ROAD, V50)
    assert r.T == T
    assert r.s == pytest.approx(r.s_plus / (1.0 + (T / ROAD.tau) * r.P), rel=1e-12)
    assert r.lam == pytest.approx(1.0 - r.s / r.s_plus, rel=1e-9)
    assert r.c == pytest.approx(-250.0 / 57.0, rel=1e-12)


def test_cic_s_equals_capacity_share():
    # s = (1 - lam) * s_plus is the renewal-weighted capacity
    r = cic(BASE, ROAD, 5.0, 0.15)
    assert r.s == pytest.approx((1.0 - r.lam) * r.s_plus, rel=1e-9)


def test_cic_wave_undefined_when_spacing_at_jam():
    r = cic(Policy(v=10 / 3.6, eta=1.5), ROAD, 5.0, 0.1)  # v*eta < l
    assert math.isnan(r.c)


def test_cic_zero_noise_degenerate_log():
    r = cic(BASE, ROAD, 5.0, 0.0)
    assert r.p == 0.0 and r.log10_p == -math.inf and r.lam == 0.0
    assert r.s == r.s_plus


def test_cic_surface_grid_order_and_roundtrip(tmp_path):
    reports = cic_surface([V50, 60 / 3.6], [1.0, 1.5, 2.0], ROAD, 5.0, 0.05)
    assert len(reports) == 6
    assert [r.eta for r in reports[:3]] == [1.0, 1.5, 2.0]
    assert reports[0].v == reports[1].v == V50
    path = tmp_path / "surface.csv"
    write_surface_csv(reports, path)
    rows = read_surface_csv(path)
    assert len(rows) == 6
    assert rows[3]["v"] == pytest.approx(60 / 3.6, rel=1e-8)
    assert rows[1]["s"] == pytest.approx(reports[1].s, rel=1e-8)
    assert list(rows[0]) == SURFACE_HEADER


def test_surface_rejects_empty_grid():
    with pytest.raises(ValueError):
        cic_surface([], [1.0], ROAD, 5.0, 0.05)


def test_road_config_validation():
    with pytest.raises(ValueError):
        RoadConfig(L=-1.0)
    with pytest.raises(ValueError):
        RoadConfig(n_lanes=3)
    with pytest.raises(ValueError):
        RoadConfig(D=-0.5)
