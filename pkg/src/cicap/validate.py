"""Monte Carlo validation of the closed-form capacity chain.

Two independent simulators:

run_semi_markov
    The road as a two-state renewal process: normal sojourns are geometric
    in steps of tau (transition probability P per step), abnormal sojourns
    last exactly T. Estimates the long-run abnormal occupancy, whose closed
    form is 1/(1 + tau/(T*P)).

run_spacetime
    A kinematic-wave traffic simulation on a segment of length L: vehicles
    enter at x = L every eta seconds, drive at v toward the exit at x = 0,
    and a collision freezes the drawn pair's follower in place for the
    clearance time T. A queue grows behind the wreck with jam spacing l
    (its back edge moves upstream at the shock-wave speed by construction),
    and the release wave after clearance discharges it at exactly one
    vehicle per eta. Entries that arrive while the queue reaches the gate
    join it virtually (frozen just above L), so inflow follows the same
    wave geometry. With two lanes, the queue head may slip around the
    blockage through the other lane whenever that lane is swept empty by
    its own blockage window and a clearance of max(D, v*eta) is free on
    both sides, at most one vehicle per eta per blockage.

Throughput is counted at the exit over a measurement window [0, H) that
begins after a lead-in long enough to make the process stationary, so the
window-edge accounting matches the hour-long closed forms.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytics import (
    Policy,
    RoadConfig,
    clearance_time,
    collision_probability,
)
from .extensions import cic_one_hour, cic_overlap, throughput_two_lane

__all__ = [
    "MonteCarloEstimate",
    "SemiMarkovConfig",
    "SemiMarkovResult",
    "ForcedEvent",
    "SpaceTimeEvent",
    "SpaceTimeResult",
    "ExtensionComparison",
    "run_semi_markov",
    "occupancy_closed_form",
    "run_spacetime",
    "two_lane_gain",
    "compare_extension",
    "EVENTS_HEADER",
    "write_events_csv",
    "write_validation_json",
    "MAX_COLLISIONS_PER_HOUR",
]

log = logging.getLogger(__name__)

# refuse configurations so collision-heavy the rare-event accounting is moot
MAX_COLLISIONS_PER_HOUR = 50.0


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Mean, standard error of the mean, and run count."""

    mean: float
    std_error: float
    n_runs: int

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("need at least one run")
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")


def _estimate(values: Sequence[float]) -> MonteCarloEstimate:
    arr = np.asarray(values, dtype=float)
    n = len(arr)
    se = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloEstimate(mean=float(arr.mean()), std_error=se, n_runs=n)


# ---------------------------------------------------------------------------
# Semi-Markov renewal simulation.


@dataclass(frozen=True)
class SemiMarkovConfig:
    """Two-state renewal process parameters.

    p_transition   per-step probability of leaving the normal state
    sojourn_normal one normal-state step (s); sojourns are geometric in it
    sojourn_abnormal fixed abnormal duration T (s)
    horizon        simulated time per run (s)
    """

    p_transition: float
    sojourn_normal: float
    sojourn_abnormal: float
    horizon: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_transition <= 1.0:
            raise ValueError("p_transition must lie in [0, 1]")
        if self.sojourn_normal <= 0 or self.sojourn_abnormal <= 0:
            raise ValueError("sojourn scales must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class SemiMarkovResult:
    occupancy: MonteCarloEstimate
    capacity_fraction: MonteCarloEstimate


def occupancy_closed_form(config: SemiMarkovConfig) -> float:
    """Long-run abnormal occupancy 1/(1 + tau/(T*P))."""
    P = config.p_transition
    if P == 0.0:
        return 0.0
    return 1.0 / (1.0 + config.sojourn_normal / (config.sojourn_abnormal * P))


def _semi_markov_once(config: SemiMarkovConfig, rng: np.random.Generator) -> float:
    """Abnormal time fraction over one horizon. Whole geometric sojourns are
    drawn at once (exactly the step-by-step distribution, far cheaper)."""
    P = config.p_transition
    if P == 0.0:
        return 0.0
    tau = config.sojourn_normal
    T = config.sojourn_abnormal
    horizon = config.horizon
    t = 0.0
    abnormal = 0.0
    block = 16384
    while t < horizon:
        spans = rng.geometric(P, size=block) * tau
        # a_j / b_j: start / end of the j-th abnormal period in this block
        a = t + np.cumsum(spans) + T * np.arange(block)
        b = a + T
        if b[-1] < horizon:
            abnormal += T * block
            t = b[-1]
            continue
        j = int(np.searchsorted(b, horizon))
        abnormal += T * j
        if a[j] < horizon:
            abnormal += horizon - a[j]
        break
    return abnormal / horizon


def run_semi_markov(config: SemiMarkovConfig, n_runs: int = 16) -> SemiMarkovResult:
    """Estimate the abnormal occupancy (and the capacity fraction 1 - it)
    over n_runs independent horizons."""
    if n_runs < 1:
        raise ValueError("need at least one run")
    children = np.random.SeedSequence(config.seed).spawn(n_runs)
    fractions = [
        _semi_markov_once(config, np.random.default_rng(child)) for child in children
    ]
    return SemiMarkovResult(
        occupancy=_estimate(fractions),
        capacity_fraction=_estimate([1.0 - f for f in fractions]),
    )


# ---------------------------------------------------------------------------
# Space-time traffic simulation.


@dataclass(frozen=True)
class ForcedEvent:
    """A scripted blockage: at time t_c (relative to the measurement window)
    the first vehicle at or upstream of x_c freezes in place."""

    t_c: float
    x_c: float
    lane: int = 0


@dataclass(frozen=True)
class SpaceTimeEvent:
    """One realized collision/blockage (t_c relative to the window start)."""

    run: int
    t_c: float
    x_c: float
    lane: int


@dataclass(frozen=True)
class SpaceTimeResult:
    throughput: MonteCarloEstimate  # per-lane exits per window
    per_run: tuple[float, ...]  # per-lane average exits, one entry per run
    per_run_lane: tuple[tuple[int, ...], ...]  # raw per-lane exit counts
    events: tuple[SpaceTimeEvent, ...]
    probe_abnormal: tuple[dict[float, float], ...]  # per run: probe -> seconds


class _Blockage:
    __slots__ = ("origin", "clear", "next_lc")

    def __init__(self, origin: float, clear: float, next_lc: float):
        self.origin = origin
        self.clear = clear
        self.next_lc = next_lc


class _Lane:
    """Vehicles ordered front (small x, index 0) to back; parallel lists."""

    __slots__ = ("xs", "stop", "rel", "block", "wreck", "sched", "last_entry", "exits")

    def __init__(self, first_entry: float):
        self.xs: list[float] = []
        self.stop: list[bool] = []
        self.rel: list[float] = []
        self.block: list[_Blockage | None] = []
        self.wreck: list[bool] = []
        self.sched = first_entry
        self.last_entry: float | None = None
        self.exits = 0


def _lc_feasible(target: _Lane, x: float, need: float) -> bool:
    """True when the target lane has at least `need` clear space on both
    sides of position x (with a float guard: consecutive drained vehicles
    sit exactly v*eta apart, which must stay feasible)."""
    slack = need - 1e-6
    idx = bisect_left(target.xs, x)
    if idx > 0 and x - target.xs[idx - 1] < slack:
        return False
    if idx < len(target.xs) and target.xs[idx] - x < slack:
        return False
    return True


def _insert_vehicle(lane: _Lane, x: float) -> None:
    idx = bisect_left(lane.xs, x)
    lane.xs.insert(idx, x)
    lane.stop.insert(idx, False)
    lane.rel.insert(idx, 0.0)
    lane.block.insert(idx, None)
    lane.wreck.insert(idx, False)


def _remove_vehicle(lane: _Lane, idx: int) -> None:
    del lane.xs[idx]
    del lane.stop[idx]
    del lane.rel[idx]
    del lane.block[idx]
    del lane.wreck[idx]


def _freeze(lane: _Lane, idx: int, x: float, b: _Blockage, c_mag: float) -> None:
    lane.xs[idx] = x
    lane.stop[idx] = True
    lane.block[idx] = b
    lane.rel[idx] = b.clear + (x - b.origin) / c_mag


def _spacetime_once(
    policy: Policy,
    road: RoadConfig,
    l: float,
    p: float,
    T: float,
    n_lanes: int,
    lane_change: bool,
    horizon: float,
    lead_in: float,
    forced: Sequence[ForcedEvent],
    probes: Sequence[float],
    rng: np.random.Generator,
    run_index: int,
    events_out: list[SpaceTimeEvent],
) -> tuple[list[int], dict[float, float]]:
    v, eta = policy.v, policy.eta
    dt = road.tau
    L = road.L
    vdt = v * dt
    if eta < dt:
        raise ValueError("eta must be at least the step tau")
    need_blockages = p > 0.0 or len(forced) > 0
    if need_blockages and v * eta <= l:
        raise ValueError("v*eta must exceed l for a defined blockage wave")
    c_mag = v * l / (v * eta - l) if need_blockages else math.inf
    need = max(road.D, v * eta)

    n_steps = int(round((lead_in + horizon) / dt))
    w0, w1 = lead_in, lead_in + horizon

    # Pre-thinned collision events: Binomial over (step, band) cells, where a
    # band is an l-wide stretch of road. Each moving-pair follower occupies
    # exactly one band, so firing the drawn band on the moving follower inside
    # it (no-op when empty) is Bernoulli(p) per moving pair per step, with O(1)
    # RNG work per step. Duplicated cells are vanishingly rare no-ops.
    n_slots = max(1, int(L // l))
    lane_events: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(n_lanes):
        if p > 0.0:
            k = int(rng.binomial(n_steps * n_slots, p))
            steps = rng.integers(0, n_steps, size=k)
            slots = rng.integers(0, n_slots, size=k)
            order = np.argsort(steps, kind="stable")
            lane_events.append((steps[order], slots[order]))
        else:
            lane_events.append((np.empty(0, dtype=int), np.empty(0, dtype=int)))
    event_ptr = [0] * n_lanes

    lanes = [_Lane(first_entry=(eta / 2.0) * li) for li in range(n_lanes)]
    pending_forced = sorted(
        ((f.t_c + lead_in, f.x_c, f.lane) for f in forced), key=lambda e: e[0]
    )
    forced_ptr = 0

    probes = sorted(probes)
    passages: dict[float, list[float]] = {pb: [] for pb in probes}
    p_min = probes[0] if probes else math.inf
    p_max = probes[-1] if probes else -math.inf

    for step in range(n_steps):
        t = step * dt

        # scripted blockages due now: freeze the straddling vehicle in place
        while forced_ptr < len(pending_forced) and pending_forced[forced_ptr][0] <= t:
            t_abs, x_c, li = pending_forced[forced_ptr]
            lane = lanes[li]
            idx = bisect_left(lane.xs, x_c)
            while idx < len(lane.xs) and lane.stop[idx]:
                idx += 1
            if idx >= len(lane.xs):
                break  # nobody upstream yet; retry next step
            b = _Blockage(origin=lane.xs[idx], clear=t + T, next_lc=t)
            _freeze(lane, idx, lane.xs[idx], b, c_mag)
            lane.wreck[idx] = True
            events_out.append(
                SpaceTimeEvent(run=run_index, t_c=t - lead_in, x_c=lane.xs[idx], lane=li)
            )
            forced_ptr += 1

        # random collisions due now: each slot is a band of width l, and fires
        # on the moving-pair follower inside it (a moving follower occupies
        # exactly one band, so this is Bernoulli(p) per moving pair per step;
        # empty bands are the thinned-out draws). Keying events by position
        # rather than list index keeps paired lane-change comparisons coherent.
        for li in range(n_lanes):
            steps_arr, slots_arr = lane_events[li]
            while event_ptr[li] < len(steps_arr) and steps_arr[event_ptr[li]] == step:
                x_lo = float(slots_arr[event_ptr[li]]) * l
                event_ptr[li] += 1
                lane = lanes[li]
                x_hi = x_lo + l
                i = bisect_left(lane.xs, x_lo)
                while i < len(lane.xs) and lane.xs[i] < x_hi:
                    if i > 0 and not lane.stop[i] and not lane.stop[i - 1]:
                        break
                    i += 1
                else:
                    continue
                b = _Blockage(origin=lane.xs[i], clear=t + T, next_lc=t)
                _freeze(lane, i, lane.xs[i], b, c_mag)
                lane.wreck[i] = True
                events_out.append(
                    SpaceTimeEvent(run=run_index, t_c=t - lead_in, x_c=lane.xs[i], lane=li)
                )

        # movement scan, front to back; collect removals to apply at the end
        migrations: list[tuple[int, int, float, _Blockage]] = []
        removals: list[list[int]] = [[] for _ in range(n_lanes)]
        for li in range(n_lanes):
            lane = lanes[li]
            xs = lane.xs
            stop = lane.stop
            other = lanes[1 - li] if n_lanes == 2 else None
            for i in range(len(xs)):
                if stop[i]:
                    if lane.rel[i] <= t:
                        stop[i] = False
                        lane.block[i] = None
                        lane.wreck[i] = False
                    else:
                        # queue head may slip around the wreck via the other lane
                        if (
                            lane_change
                            and other is not None
                            and not lane.wreck[i]
                            and i > 0
                            and lane.wreck[i - 1]
                        ):
                            b = lane.block[i]
                            if (
                                b is not None
                                and t >= b.next_lc
                                and _lc_feasible(other, xs[i], need)
                            ):
                                migrations.append((li, i, xs[i], b))
                                b.next_lc = t + eta
                        continue
                x = xs[i]
                xn = x - vdt
                if i > 0 and stop[i - 1] and xn < xs[i - 1] + l:
                    xq = xs[i - 1] + l
                    if li == 0 and probes and xq < p_max and x >= p_min:
                        for pb in probes:
                            if xq < pb <= x:
                                passages[pb].append(t + (x - pb) / v)
                    _freeze(lane, i, xq, lane.block[i - 1], c_mag)
                    continue
                if li == 0 and probes and xn < p_max and x >= p_min:
                    for pb in probes:
                        if xn < pb <= x:
                            passages[pb].append(t + (x - pb) / v)
                if xn <= 0.0:
                    t_exit = t + x / v
                    if w0 <= t_exit < w1:
                        lane.exits += 1
                    removals[li].append(i)
                else:
                    xs[i] = xn

        # apply removals back to front; a migrating queue head rolls its queue
        # one slot forward so the drain keeps feeding from the blockage site
        # (release times re-synced to the compacted positions)
        items: list[list[tuple[int, _Blockage | None]]] = [[] for _ in range(n_lanes)]
        for li in range(n_lanes):
            items[li] = [(idx, None) for idx in removals[li]]
        for li, i, x, b in migrations:
            items[li].append((i, b))
        for li in range(n_lanes):
            lane = lanes[li]
            for idx, b in sorted(items[li], reverse=True, key=lambda e: e[0]):
                _remove_vehicle(lane, idx)
                if b is None:
                    continue
                j = idx
                while j < len(lane.xs) and lane.stop[j] and lane.block[j] is b:
                    lane.xs[j] -= l
                    lane.rel[j] = b.clear + (lane.xs[j] - b.origin) / c_mag
                    j += 1
        # a migrant completes the lane change and keeps rolling within the
        # step, so the next drain slot opens exactly eta later
        for li, _, x, _b in migrations:
            xm = x - vdt
            if xm <= 0.0:
                t_exit = t + x / v
                if w0 <= t_exit < w1:
                    lanes[1 - li].exits += 1
            else:
                _insert_vehicle(lanes[1 - li], xm)

        # entries: metered at one vehicle per eta per lane. A gate reached by
        # the queue admits the entrant as a frozen member just above L (the
        # wave geometry carries through the boundary); entries held back by a
        # too-close moving vehicle replay later, still at most one per eta and
        # only with full v*eta clearance (free-flow spacing).
        for li in range(n_lanes):
            lane = lanes[li]
            while lane.sched <= t + 1e-9:
                if lane.last_entry is not None and t - lane.last_entry < eta - 1e-9:
                    break
                if lane.xs and lane.stop[-1] and lane.xs[-1] + l >= L:
                    b = lane.block[-1]
                    x_spawn = lane.xs[-1] + l
                    lane.xs.append(x_spawn)
                    lane.stop.append(True)
                    lane.block.append(b)
                    lane.rel.append(b.clear + (x_spawn - b.origin) / c_mag)
                    lane.wreck.append(False)
                elif lane.xs and not lane.stop[-1] and lane.xs[-1] > L - v * eta + 1e-9:
                    break  # entry would compress below free-flow spacing
                else:
                    # the crossing of a probe at L is recorded by the next
                    # movement step (x == L satisfies xn < pb <= x)
                    lane.xs.append(L)
                    lane.stop.append(False)
                    lane.rel.append(0.0)
                    lane.block.append(None)
                    lane.wreck.append(False)
                lane.last_entry = t
                lane.sched += eta

    probe_abnormal: dict[float, float] = {}
    for pb in probes:
        times = passages[pb]
        if len(times) < 2:
            probe_abnormal[pb] = math.nan
            continue
        gaps = np.diff(np.asarray(times))
        probe_abnormal[pb] = max(0.0, float(gaps.max()) - eta)
    return [lane.exits for lane in lanes], probe_abnormal


def run_spacetime(
    policy: Policy,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    horizon: float | None = None,
    n_lanes: int | None = None,
    lane_change: bool = False,
    seed: int = 0,
    *,
    n_runs: int = 1,
    collisions: bool = True,
    forced_events: Sequence[ForcedEvent] = (),
    probes: Sequence[float] = (),
    lead_in: float | None = None,
) -> SpaceTimeResult:
    """Simulate the segment and count exits per lane over the window.

    Collisions arrive per moving pair per step with the closed-form
    probability p (disable with collisions=False); forced_events script
    additional blockages. probes are lane-0 positions whose flow
    interruptions are measured (max passage gap minus eta). The lead-in
    defaults to T + L/v + 10*eta so the window sees the stationary process.
    """
    horizon = road.H if horizon is None else float(horizon)
    n_lanes = road.n_lanes if n_lanes is None else int(n_lanes)
    if n_lanes not in (1, 2):
        raise ValueError("n_lanes must be 1 or 2")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    p = collision_probability(policy, l, sigma_o) if collisions else 0.0
    T = clearance_time(road, policy.v)
    if p > 0.0:
        per_hour = (3600.0 / road.tau) * (road.L / (policy.v * policy.eta)) * p
        if per_hour > MAX_COLLISIONS_PER_HOUR:
            raise ValueError(
                f"expected {per_hour:.1f} collisions/hour exceeds "
                f"{MAX_COLLISIONS_PER_HOUR}; not a rare-event configuration"
            )
        if per_hour > 1.0:
            log.warning(
                "expected %.2f collisions/hour: beyond the truncated regime",
                per_hour,
            )
    if lead_in is None:
        lead_in = (T if (p > 0.0) else 0.0) + road.L / policy.v + 10.0 * policy.eta
    for f in forced_events:
        if not 0.0 <= f.x_c <= road.L:
            raise ValueError("forced event position outside the segment")
        if f.lane >= n_lanes:
            raise ValueError("forced event lane outside the configuration")

    children = np.random.SeedSequence(seed).spawn(n_runs)
    events: list[SpaceTimeEvent] = []
    per_run: list[float] = []
    per_run_lane: list[tuple[int, ...]] = []
    probe_results: list[dict[float, float]] = []
    for r, child in enumerate(children):
        counts, probe_ab = _spacetime_once(
            policy, road, l, p, T, n_lanes, lane_change, horizon, lead_in,
            forced_events, probes, np.random.default_rng(child), r, events,
        )
        per_run.append(sum(counts) / n_lanes)
        per_run_lane.append(tuple(counts))
        probe_results.append(probe_ab)
    return SpaceTimeResult(
        throughput=_estimate(per_run),
        per_run=tuple(per_run),
        per_run_lane=tuple(per_run_lane),
        events=tuple(events),
        probe_abnormal=tuple(probe_results),
    )


def two_lane_gain(
    policy: Policy,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    n_runs: int = 100,
    seed: int = 0,
) -> tuple[MonteCarloEstimate, float]:
    """Paired estimate of the lane-change gain (per-lane exits per window)
    against the closed-form p_l2 * Delta_s * H. Both arms replay the same
    collision draws, so runs without a two-lane overlap cancel exactly."""
    on = run_spacetime(
        policy, road, l, sigma_o, n_lanes=2, lane_change=True, seed=seed,
        n_runs=n_runs,
    )
    off = run_spacetime(
        policy, road, l, sigma_o, n_lanes=2, lane_change=False, seed=seed,
        n_runs=n_runs,
    )
    diffs = [a - b for a, b in zip(on.per_run, off.per_run)]
    two = road if road.n_lanes == 2 else RoadConfig(
        L=road.L, tau=road.tau, tct=road.tct, n_lanes=2, D=road.D, H=road.H
    )
    lane2 = throughput_two_lane(policy, two, l, sigma_o)
    analytic = lane2.gain * road.H
    return _estimate(diffs), analytic


@dataclass(frozen=True)
class ExtensionComparison:
    """Closed form vs Monte Carlo for one scenario, in veh/h per lane."""

    scenario: str
    analytic: float
    mc_mean: float
    mc_stderr: float
    n_runs: int
    rel_gap: float


def compare_extension(
    policy: Policy,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    scenario: str,
    n_runs: int = 8,
    seed: int = 0,
) -> ExtensionComparison:
    """Compare one hour-long closed form against the space-time simulation.

    Scenarios: "baseline" (first-order), "overlap" (second-order; same
    simulation, finer analytic), "two-lane" (per-lane throughput with lane
    changing), "two-lane-gain" (paired gain alone).
    """
    H = road.H
    to_vph = 3600.0 / H
    if scenario == "two-lane-gain":
        est, analytic_window = two_lane_gain(policy, road, l, sigma_o, n_runs, seed)
        analytic = analytic_window * to_vph
        mc_mean = est.mean * to_vph
        mc_se = est.std_error * to_vph
    else:
        if scenario == "baseline":
            analytic = cic_one_hour(policy, road, l, sigma_o).s * 3600.0
            mc = run_spacetime(
                policy, road, l, sigma_o, n_lanes=1, lane_change=False,
                seed=seed, n_runs=n_runs,
            )
        elif scenario == "overlap":
            analytic = cic_overlap(policy, road, l, sigma_o).s * 3600.0
            mc = run_spacetime(
                policy, road, l, sigma_o, n_lanes=1, lane_change=False,
                seed=seed, n_runs=n_runs,
            )
        elif scenario == "two-lane":
            two = road if road.n_lanes == 2 else RoadConfig(
                L=road.L, tau=road.tau, tct=road.tct, n_lanes=2, D=road.D, H=road.H
            )
            analytic = throughput_two_lane(policy, two, l, sigma_o).s * 3600.0
            mc = run_spacetime(
                policy, two, l, sigma_o, n_lanes=2, lane_change=True,
                seed=seed, n_runs=n_runs,
            )
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
        mc_mean = mc.throughput.mean * to_vph
        mc_se = mc.throughput.std_error * to_vph
    denom = abs(analytic) if analytic != 0.0 else 1.0
    return ExtensionComparison(
        scenario=scenario,
        analytic=analytic,
        mc_mean=mc_mean,
        mc_stderr=mc_se,
        n_runs=n_runs,
        rel_gap=abs(analytic - mc_mean) / denom,
    )


EVENTS_HEADER = ["run", "t_c", "x_c", "lane"]


def write_events_csv(events: Sequence[SpaceTimeEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENTS_HEADER)
        for e in events:
            w.writerow([e.run, f"{e.t_c:.9g}", f"{e.x_c:.9g}", e.lane])


def write_validation_json(comparison: ExtensionComparison, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            {
                "scenario": comparison.scenario,
                "analytic": comparison.analytic,
                "mc_mean": comparison.mc_mean,
                "mc_stderr": comparison.mc_stderr,
                "n_runs": comparison.n_runs,
                "rel_gap": comparison.rel_gap,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
