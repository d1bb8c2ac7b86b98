"""Car-following simulation: equilibrium-gap oracle values frozen from a
60-digit arbitrary-precision evaluation, plus determinism/stability checks."""

import math

import numpy as np
import pytest

from cicap.simcore import (
    GAP_FLOOR,
    MAX_REDRAWS,
    NoiseSpec,
    ObservedGapError,
    SWEEP_HEADER,
    SimState,
    StringCollisionError,
    TRAJECTORY_HEADER,
    Trajectory,
    VehicleSpec,
    equilibrium_gap,
    gap_variance,
    post_warmup,
    simulate_pair,
    simulate_string,
    step_idm,
    sweep_cell,
    variance_sweep,
)

VEH = VehicleSpec()  # a=2, b=2, v0=120 km/h, xi=4, d0=0, h0=1.5, l=5
QUIET = NoiseSpec(sigma_d=0.0, sigma_dv=0.0, sigma_acc=0.0, sigma_o=0.0)


# --- equilibrium gap ---------------------------------------------------------


def test_equilibrium_gap_frozen_50kmh():
    assert equilibrium_gap(VEH, 50.0 / 3.6) == pytest.approx(21.15458070065103, rel=1e-12)


def test_equilibrium_gap_frozen_60kmh():
    assert equilibrium_gap(VEH, 60.0 / 3.6) == pytest.approx(25.819888974716113, rel=1e-12)


def test_equilibrium_gap_closed_form_cross_check():
    # (d0 + h0 v) / sqrt(1 - (v/v0)^xi), independently recomputed here
    for v in (20 / 3.6, 45 / 3.6, 90 / 3.6):
        expected = (VEH.d0 + VEH.h0 * v) / math.sqrt(1.0 - (v / VEH.v0) ** VEH.xi)
        assert equilibrium_gap(VEH, v) == pytest.approx(expected, rel=1e-14)


def test_equilibrium_gap_diverges_near_free_speed():
    assert equilibrium_gap(VEH, 0.999 * VEH.v0) > 20 * equilibrium_gap(VEH, 0.5 * VEH.v0)


def test_equilibrium_gap_domain():
    with pytest.raises(ValueError):
        equilibrium_gap(VEH, 0.0)
    with pytest.raises(ValueError):
        equilibrium_gap(VEH, VEH.v0)


def test_equilibrium_is_fixed_point_of_noise_free_dynamics():
    v = 50.0 / 3.6
    d = equilibrium_gap(VEH, v)
    state = SimState(t=0.0, x_e=0.0, v_e=v, x_lead=d, v_lead=v)
    rng = np.random.default_rng(0)
    for _ in range(50):
        state = step_idm(state, VEH, QUIET, 0.1, rng)
    assert state.gap == pytest.approx(d, abs=1e-9)
    assert state.v_e == pytest.approx(v, abs=1e-9)


# --- stepping ----------------------------------------------------------------


def test_step_closes_large_gap():
    v = 50.0 / 3.6
    d = equilibrium_gap(VEH, v)
    state = SimState(t=0.0, x_e=0.0, v_e=v, x_lead=3 * d, v_lead=v)
    rng = np.random.default_rng(1)
    out = step_idm(state, VEH, QUIET, 0.1, rng)
    assert out.v_e > v  # accelerates into the slack


def test_step_brakes_on_small_gap():
    v = 50.0 / 3.6
    d = equilibrium_gap(VEH, v)
    state = SimState(t=0.0, x_e=0.0, v_e=v, x_lead=0.4 * d, v_lead=v)
    rng = np.random.default_rng(1)
    out = step_idm(state, VEH, QUIET, 0.1, rng)
    assert out.v_e < v


def test_step_speed_floors_at_zero():
    # Hard braking demand: raw update would drive the speed negative, the
    # step clamps it at rest instead.
    state = SimState(t=0.0, x_e=0.0, v_e=0.5, x_lead=0.2, v_lead=0.0)
    out = step_idm(state, VEH, QUIET, 0.1, np.random.default_rng(2))
    assert out.v_e == 0.0
    assert out.x_e == state.x_e  # position advances with the updated speed


def test_step_validates_dt():
    state = SimState(t=0.0, x_e=0.0, v_e=1.0, x_lead=30.0, v_lead=1.0)
    with pytest.raises(ValueError):
        step_idm(state, VEH, QUIET, 0.0, np.random.default_rng(0))


# --- pair simulation ---------------------------------------------------------


def test_simulate_pair_deterministic_given_seed():
    noisy = NoiseSpec(sigma_d=0.3)
    a = simulate_pair(VEH, noisy, 50 / 3.6, 60.0, seed=42)
    b = simulate_pair(VEH, noisy, 50 / 3.6, 60.0, seed=42)
    assert np.array_equal(a.gap, b.gap) and np.array_equal(a.v_e, b.v_e)
    c = simulate_pair(VEH, noisy, 50 / 3.6, 60.0, seed=43)
    assert not np.array_equal(a.gap, c.gap)


def test_simulate_pair_quiet_stays_at_equilibrium():
    traj = simulate_pair(VEH, QUIET, 50 / 3.6, 120.0, seed=0)
    d = equilibrium_gap(VEH, 50 / 3.6)
    assert np.max(np.abs(traj.gap - d)) < 1e-8
    assert traj.dt == 0.1
    assert len(traj) == 1200  # sample k is the state at k*dt
    assert traj.t[0] == 0.0 and traj.t[-1] == pytest.approx(119.9, rel=1e-12)


def test_simulate_pair_noisy_gap_spread_reasonable():
    traj = simulate_pair(
        VEH, NoiseSpec(sigma_d=1.0, sigma_dv=1.0, sigma_acc=1.0),
        50 / 3.6, 600.0, seed=7,
    )
    body = post_warmup(traj.gap)
    var = gap_variance(traj)
    assert 0.05 < var < 5.0  # stationary fluctuation, not blow-up
    assert len(body) == len(traj.gap) - max(int(0.1 * len(traj.gap)), 100)
    assert var == pytest.approx(np.var(body, ddof=1), rel=1e-12)


def test_simulate_pair_minimum_length():
    with pytest.raises(ValueError):
        simulate_pair(VEH, QUIET, 50 / 3.6, 5.0, dt=0.1)  # fewer than 100 steps


def test_observed_gap_floor_and_redraw_exhaustion():
    # With observation noise dwarfing a tiny equilibrium gap, every redraw
    # lands below the floor and the run refuses rather than dividing by a
    # garbage observation.
    veh = VehicleSpec(h0=0.1)
    noise = NoiseSpec(sigma_d=50.0)
    with pytest.raises(ObservedGapError):
        simulate_pair(veh, noise, 1.0, 60.0, seed=3)
    assert MAX_REDRAWS == 8 and GAP_FLOOR == 0.01


# --- string simulation -------------------------------------------------------


def test_simulate_string_quiet_matches_pair():
    trajs = simulate_string(VEH, QUIET, 50 / 3.6, 3, 60.0, seed=0)
    assert len(trajs) == 3
    d = equilibrium_gap(VEH, 50 / 3.6)
    for traj in trajs:
        assert np.max(np.abs(traj.gap - d)) < 1e-8


def test_simulate_string_collision_reports_index_and_time():
    veh = VehicleSpec(h0=0.8)  # equilibrium gap barely above the body length
    noise = NoiseSpec(sigma_acc=6.0)
    with pytest.raises(StringCollisionError) as exc:
        simulate_string(veh, noise, 30 / 3.6, 5, 300.0, seed=12)
    assert 1 <= exc.value.vehicle_index <= 5
    assert 0.0 < exc.value.time <= 300.0


# --- warmup and variance -----------------------------------------------------


def test_post_warmup_discards_max_of_fraction_and_floor():
    assert len(post_warmup(np.zeros(500))) == 400  # floor dominates 10 %
    assert len(post_warmup(np.zeros(5000))) == 4500  # 10 % dominates floor
    with pytest.raises(ValueError):
        post_warmup(np.zeros(101))  # fewer than 2 samples would remain


def test_gap_variance_uses_sample_convention():
    t = np.arange(0, 200.0, 0.1)
    n = len(t)
    rng = np.random.default_rng(5)
    gaps = rng.normal(20.0, 0.5, n)
    traj = Trajectory(t=t, gap=gaps, v_e=np.full(n, 10.0), accel=np.zeros(n), dt=0.1)
    cut = max(int(0.1 * n), 100)
    assert gap_variance(traj) == pytest.approx(np.var(gaps[cut:], ddof=1), rel=1e-12)


# --- sweep -------------------------------------------------------------------


def test_sweep_cell_replaces_headway_and_flags_collision():
    cell = sweep_cell(VEH, NoiseSpec(sigma_d=0.5), 0, 0, 50 / 3.6, 1, 2.0,
                      duration=30.0)
    assert cell.v == 50 / 3.6 and cell.eta == 2.0
    assert cell.var_gap > 0.0 and cell.collided in (False, True)


def test_sweep_cell_seed_is_order_independent():
    a = sweep_cell(VEH, NoiseSpec(sigma_d=0.5), 9, 2, 50 / 3.6, 3, 1.5, duration=30.0)
    b = sweep_cell(VEH, NoiseSpec(sigma_d=0.5), 9, 2, 50 / 3.6, 3, 1.5, duration=30.0)
    assert a == b


def test_variance_sweep_covers_grid():
    cells = variance_sweep(VEH, NoiseSpec(sigma_d=0.5), [40 / 3.6, 50 / 3.6],
                           [1.0, 1.5], duration=30.0)
    assert len(cells) == 4
    assert {(round(c.v, 6), c.eta) for c in cells} == {
        (round(40 / 3.6, 6), 1.0), (round(40 / 3.6, 6), 1.5),
        (round(50 / 3.6, 6), 1.0), (round(50 / 3.6, 6), 1.5),
    }


def test_csv_headers_stable():
    assert TRAJECTORY_HEADER == ["t", "gap", "v_e", "accel"]
    assert SWEEP_HEADER == ["v", "eta", "var_gap", "collided", "seed"]


def test_spec_validation():
    with pytest.raises(ValueError):
        VehicleSpec(a=0.0)
    with pytest.raises(ValueError):
        VehicleSpec(l=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma_o=-0.01)
