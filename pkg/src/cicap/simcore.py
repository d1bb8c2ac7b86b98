"""Noise-perturbed car-following simulation.

Implements the Intelligent Driver Model (IDM) with additive Gaussian
observation and actuation errors: the follower observes its gap and speed
difference through noisy sensors and applies a noisy acceleration command.
The discretization is semi-implicit Euler at a fixed step: speed first,
then position with the updated speed.

Main entry points:

  equilibrium_gap(veh, v)      steady-state gap at cruise speed v
  step_idm(state, veh, noise, dt, rng)
                               advance one follower/leader pair by dt
  simulate_pair(...)           one follower behind a constant-speed leader
  simulate_string(...)         a platoon of followers behind the leader
  variance_sweep(...)          gap-variance grid over (speed, headway) cells

All quantities are SI (m, s, m/s). Randomness comes from
numpy.random.Generator; every public simulation accepts a seed (or
SeedSequence) and is fully reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "GAP_FLOOR",
    "MAX_REDRAWS",
    "VehicleSpec",
    "NoiseSpec",
    "SimState",
    "Trajectory",
    "SweepCell",
    "SimulationError",
    "ObservedGapError",
    "StringCollisionError",
    "equilibrium_gap",
    "step_idm",
    "simulate_pair",
    "simulate_string",
    "variance_sweep",
    "sweep_cell",
    "post_warmup",
    "gap_variance",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_sweep_csv",
    "read_sweep_csv",
]

# Observed gaps at or below this floor are redrawn: the model divides by the
# observed gap, so a near-zero or negative observation is unusable.
GAP_FLOOR = 0.01
# Redraw budget per step before the run is abandoned.
MAX_REDRAWS = 8

# Warm-up discard rule shared by the sweep and its tests: first 10 % of the
# samples, at least 100.
WARMUP_FRACTION = 0.1
WARMUP_MIN_SAMPLES = 100


class SimulationError(RuntimeError):
    """A simulation could not be carried to completion."""


class ObservedGapError(SimulationError):
    """The observed gap stayed at or below GAP_FLOOR after MAX_REDRAWS redraws."""

    def __init__(self, gap: float, message: str | None = None):
        self.gap = gap
        super().__init__(
            message
            or f"observed gap stayed <= {GAP_FLOOR} m after {MAX_REDRAWS} redraws "
            f"(true gap {gap:.6g} m)"
        )


class StringCollisionError(SimulationError):
    """A follower in a string closed to within one vehicle length of its leader."""

    def __init__(self, vehicle_index: int, time: float):
        self.vehicle_index = vehicle_index
        self.time = time
        super().__init__(
            f"vehicle {vehicle_index} collided with its predecessor at t={time:.3f} s"
        )


@dataclass(frozen=True)
class VehicleSpec:
    """Vehicle and controller parameters.

    a, b     maximum acceleration / comfortable deceleration (m/s^2)
    v0       desired (free-flow) speed (m/s)
    xi       free-flow exponent
    d0       standstill gap (m)
    h0       desired time headway (s)
    l        vehicle length, used as the collision threshold (m)
    """

    a: float = 2.0
    b: float = 2.0
    v0: float = 120.0 / 3.6
    xi: float = 4.0
    d0: float = 0.0
    h0: float = 1.5
    l: float = 5.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if self.v0 <= 0:
            raise ValueError("v0 must be positive")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        if self.d0 < 0:
            raise ValueError("d0 must be non-negative")
        if self.h0 <= 0:
            raise ValueError("h0 must be positive")
        if self.l <= 0:
            raise ValueError("l must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    """Standard deviations of the three error channels.

    sigma_d    gap observation error (m)
    sigma_dv   speed-difference observation error (m/s)
    sigma_acc  acceleration actuation error (m/s^2)
    sigma_o    aggregated per-headway observation scale (s^(1/2)) used by the
               macroscopic distance model; not consumed by the stepping code.
    """

    sigma_d: float = 0.0
    sigma_dv: float = 0.0
    sigma_acc: float = 0.0
    sigma_o: float = 0.05

    def __post_init__(self):
        for name in ("sigma_d", "sigma_dv", "sigma_acc", "sigma_o"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class SimState:
    """Instantaneous state of a follower/leader pair (positions absolute)."""

    t: float
    x_e: float
    v_e: float
    x_lead: float
    v_lead: float

    @property
    def gap(self) -> float:
        return self.x_lead - self.x_e


@dataclass
class Trajectory:
    """Fixed-step record of one follower.

    Sample k holds the state at t[k] plus the (noisy) acceleration computed
    there and applied over [t[k], t[k]+dt). All arrays share one length,
    at least 2, with constant spacing dt.
    """

    t: np.ndarray
    gap: np.ndarray
    v_e: np.ndarray
    accel: np.ndarray
    dt: float
    seed: object = None
    v_lead: float = float("nan")
    clamp_count: int = 0

    def __post_init__(self):
        n = len(self.t)
        if n < 2:
            raise ValueError("a trajectory needs at least 2 samples")
        if not (len(self.gap) == len(self.v_e) == len(self.accel) == n):
            raise ValueError("trajectory arrays must share one length")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class SweepCell:
    """One (speed, headway, seed) cell of a variance sweep."""

    v: float
    eta: float
    var_gap: float
    collided: bool
    seed: int


def equilibrium_gap(veh: VehicleSpec, v: float) -> float:
    """Steady-state gap behind a constant-speed leader at speed v.

    The acceleration is exactly zero at this gap when both vehicles move at
    v: (d*/d_eq)^2 absorbs the free-flow deficit 1 - (v/v0)^xi.
    """
    if not 0.0 < v < veh.v0:
        raise ValueError(f"equilibrium requires 0 < v < v0 (got v={v}, v0={veh.v0})")
    return (veh.d0 + veh.h0 * v) * (1.0 - (v / veh.v0) ** veh.xi) ** -0.5


def _observe_gap(d: float, sigma_d: float, rng: np.random.Generator) -> float:
    """True gap plus observation noise, redrawn while at or below GAP_FLOOR."""
    if sigma_d == 0.0:
        if d <= GAP_FLOOR:
            raise ObservedGapError(d)
        return d
    d_obs = d + rng.normal(0.0, sigma_d)
    redraws = 0
    while d_obs <= GAP_FLOOR:
        if redraws >= MAX_REDRAWS:
            raise ObservedGapError(d)
        d_obs = d + rng.normal(0.0, sigma_d)
        redraws += 1
    return d_obs


def _idm_accel(
    veh: VehicleSpec, v_e: float, d_obs: float, dv_obs: float, two_sqrt_ab: float
) -> float:
    """Deterministic IDM acceleration from observed inputs."""
    d_star = veh.d0 + v_e * veh.h0 + v_e * dv_obs / two_sqrt_ab
    return veh.a * (1.0 - (v_e / veh.v0) ** veh.xi - (d_star / d_obs) ** 2)


def step_idm(
    state: SimState,
    veh: VehicleSpec,
    noise: NoiseSpec,
    dt: float,
    rng: np.random.Generator,
) -> SimState:
    """Advance one pair by dt: noisy observation, IDM acceleration, speed
    update with a floor at 0, then positions with the updated speed."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = state.x_lead - state.x_e
    d_obs = _observe_gap(d, noise.sigma_d, rng)
    dv = state.v_e - state.v_lead
    if noise.sigma_dv > 0.0:
        dv += rng.normal(0.0, noise.sigma_dv)
    acc = _idm_accel(veh, state.v_e, d_obs, dv, 2.0 * math.sqrt(veh.a * veh.b))
    if noise.sigma_acc > 0.0:
        acc += rng.normal(0.0, noise.sigma_acc)
    v_new = state.v_e + acc * dt
    if v_new < 0.0:
        v_new = 0.0
    return SimState(
        t=state.t + dt,
        x_e=state.x_e + v_new * dt,
        v_e=v_new,
        x_lead=state.x_lead + state.v_lead * dt,
        v_lead=state.v_lead,
    )


def simulate_pair(
    veh: VehicleSpec,
    noise: NoiseSpec,
    v_lead: float,
    duration: float,
    dt: float = 0.1,
    seed: object = 0,
) -> Trajectory:
    """Simulate one follower behind a constant-speed leader.

    Starts at the equilibrium gap with matched speeds so that the noise-free
    run is exactly stationary. Returns the sampled trajectory; sample k is
    the state at k*dt with the acceleration applied over that step.
    """
    n_steps = int(round(duration / dt))
    if n_steps < 100:
        raise ValueError("duration must cover at least 100 steps")
    rng = np.random.default_rng(seed)
    two_sqrt_ab = 2.0 * math.sqrt(veh.a * veh.b)
    sigma_d, sigma_dv, sigma_acc = noise.sigma_d, noise.sigma_dv, noise.sigma_acc

    x_e = 0.0
    x_lead = equilibrium_gap(veh, v_lead)
    v_e = v_lead

    gaps = np.empty(n_steps)
    vs = np.empty(n_steps)
    accs = np.empty(n_steps)
    clamps = 0
    for k in range(n_steps):
        d = x_lead - x_e
        try:
            d_obs = _observe_gap(d, sigma_d, rng)
        except ObservedGapError as exc:
            raise ObservedGapError(
                d, f"step {k} (t={k * dt:.3f} s): {exc}"
            ) from exc
        dv = v_e - v_lead
        if sigma_dv > 0.0:
            dv += rng.normal(0.0, sigma_dv)
        acc = _idm_accel(veh, v_e, d_obs, dv, two_sqrt_ab)
        if sigma_acc > 0.0:
            acc += rng.normal(0.0, sigma_acc)
        gaps[k] = d
        vs[k] = v_e
        accs[k] = acc
        v_new = v_e + acc * dt
        if v_new < 0.0:
            v_new = 0.0
            clamps += 1
        x_e += v_new * dt
        x_lead += v_lead * dt
        v_e = v_new
    return Trajectory(
        t=np.arange(n_steps) * dt,
        gap=gaps,
        v_e=vs,
        accel=accs,
        dt=dt,
        seed=seed,
        v_lead=v_lead,
        clamp_count=clamps,
    )


def simulate_string(
    veh: VehicleSpec,
    noise: NoiseSpec,
    v_lead: float,
    n_followers: int,
    duration: float,
    dt: float = 0.1,
    seed: object = 0,
) -> list[Trajectory]:
    """Simulate a string of followers behind one constant-speed leader.

    Every follower runs the same noisy controller against its immediate
    predecessor; updates are simultaneous (all accelerations are computed
    from the state at t before anyone moves). A gap at or below the vehicle
    length ends the run with StringCollisionError carrying the follower
    index (1-based) and time.
    """
    if n_followers < 1:
        raise ValueError("need at least one follower")
    n_steps = int(round(duration / dt))
    if n_steps < 100:
        raise ValueError("duration must cover at least 100 steps")
    rng = np.random.default_rng(seed)
    two_sqrt_ab = 2.0 * math.sqrt(veh.a * veh.b)
    sigma_d, sigma_dv, sigma_acc = noise.sigma_d, noise.sigma_dv, noise.sigma_acc

    d_eq = equilibrium_gap(veh, v_lead)
    # index 0 is the leader; follower i sits i*d_eq behind it
    x = [-i * d_eq for i in range(n_followers + 1)]
    v = [v_lead] * (n_followers + 1)

    gaps = np.empty((n_followers, n_steps))
    vs = np.empty((n_followers, n_steps))
    accs = np.empty((n_followers, n_steps))
    clamps = [0] * n_followers

    for k in range(n_steps):
        step_acc = [0.0] * n_followers
        for i in range(1, n_followers + 1):
            d = x[i - 1] - x[i]
            try:
                d_obs = _observe_gap(d, sigma_d, rng)
            except ObservedGapError as exc:
                raise ObservedGapError(
                    d, f"vehicle {i}, step {k} (t={k * dt:.3f} s): {exc}"
                ) from exc
            dv = v[i] - v[i - 1]
            if sigma_dv > 0.0:
                dv += rng.normal(0.0, sigma_dv)
            acc = _idm_accel(veh, v[i], d_obs, dv, two_sqrt_ab)
            if sigma_acc > 0.0:
                acc += rng.normal(0.0, sigma_acc)
            gaps[i - 1, k] = d
            vs[i - 1, k] = v[i]
            accs[i - 1, k] = acc
            step_acc[i - 1] = acc
        # simultaneous update: leader first, then every follower
        x[0] += v_lead * dt
        for i in range(1, n_followers + 1):
            v_new = v[i] + step_acc[i - 1] * dt
            if v_new < 0.0:
                v_new = 0.0
                clamps[i - 1] += 1
            x[i] += v_new * dt
            v[i] = v_new
        for i in range(1, n_followers + 1):
            if x[i - 1] - x[i] <= veh.l:
                raise StringCollisionError(i, (k + 1) * dt)

    t_axis = np.arange(n_steps) * dt
    return [
        Trajectory(
            t=t_axis.copy(),
            gap=gaps[i],
            v_e=vs[i],
            accel=accs[i],
            dt=dt,
            seed=seed,
            v_lead=v_lead,
            clamp_count=clamps[i],
        )
        for i in range(n_followers)
    ]


def post_warmup(values: np.ndarray) -> np.ndarray:
    """Drop the warm-up prefix: first 10 % of samples, at least 100."""
    n = len(values)
    cut = max(int(n * WARMUP_FRACTION), WARMUP_MIN_SAMPLES)
    if n - cut < 2:
        raise ValueError(f"only {n} samples: nothing left after warm-up")
    return values[cut:]


def gap_variance(traj: Trajectory) -> float:
    """Sample variance of the gap after the warm-up discard."""
    return float(np.var(post_warmup(traj.gap), ddof=1))


def variance_sweep(
    veh: VehicleSpec,
    noise: NoiseSpec,
    v_grid: Sequence[float],
    eta_grid: Sequence[float],
    duration: float = 3600.0,
    dt: float = 0.1,
    seeds: Sequence[int] = (0,),
) -> list[SweepCell]:
    """Gap-variance sweep over a (speed, headway) grid.

    Each cell realizes the desired headway by setting h0 = eta with d0 = 0
    and runs one pair per seed at leader speed v. The cell statistic is the
    post-warm-up gap variance; a cell whose gap ever closed to the vehicle
    length is flagged as collided rather than dropped. Per-cell seeds are
    derived from (seed, iv, ie) so results do not depend on execution order.
    """
    if len(v_grid) == 0 or len(eta_grid) == 0 or len(seeds) == 0:
        raise ValueError("v_grid, eta_grid and seeds must be non-empty")
    return [
        sweep_cell(veh, noise, base, iv, float(v), ie, float(eta), duration, dt)
        for base in seeds
        for iv, v in enumerate(v_grid)
        for ie, eta in enumerate(eta_grid)
    ]


def sweep_cell(
    veh: VehicleSpec,
    noise: NoiseSpec,
    base: int,
    iv: int,
    v: float,
    ie: int,
    eta: float,
    duration: float = 3600.0,
    dt: float = 0.1,
) -> SweepCell:
    """One sweep cell; the (base, iv, ie) triple fixes its RNG stream so the
    result is identical whether cells run serially or in parallel."""
    cell_veh = replace(veh, h0=float(eta), d0=0.0)
    ss = np.random.SeedSequence([int(base), iv, ie])
    traj = simulate_pair(cell_veh, noise, float(v), duration, dt, seed=ss)
    return SweepCell(
        v=float(v),
        eta=float(eta),
        var_gap=gap_variance(traj),
        collided=bool(np.any(traj.gap <= veh.l)),
        seed=int(base),
    )


# ---------------------------------------------------------------------------
# CSV round-trip for the two artifacts this module owns.

TRAJECTORY_HEADER = ["t", "gap", "v_e", "accel"]
SWEEP_HEADER = ["v", "eta", "var_gap", "collided", "seed"]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for k in range(len(traj)):
            w.writerow(
                [
                    f"{traj.t[k]:.9g}",
                    f"{traj.gap[k]:.9g}",
                    f"{traj.v_e[k]:.9g}",
                    f"{traj.accel[k]:.9g}",
                ]
            )


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header: {header}")
        rows = [[float(c) for c in row] for row in r]
    arr = np.asarray(rows)
    dt = float(arr[1, 0] - arr[0, 0])
    return Trajectory(
        t=arr[:, 0], gap=arr[:, 1], v_e=arr[:, 2], accel=arr[:, 3], dt=dt
    )


def write_sweep_csv(cells: Sequence[SweepCell], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for c in cells:
            w.writerow(
                [
                    f"{c.v:.9g}",
                    f"{c.eta:.9g}",
                    f"{c.var_gap:.9g}",
                    int(c.collided),
                    c.seed,
                ]
            )


def read_sweep_csv(path) -> list[SweepCell]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != SWEEP_HEADER:
            raise ValueError(f"unexpected sweep header: {header}")
        return [
            SweepCell(
                v=float(row[0]),
                eta=float(row[1]),
                var_gap=float(row[2]),
                collided=bool(int(row[3])),
                seed=int(row[4]),
            )
            for row in r
        ]
