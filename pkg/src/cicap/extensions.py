"""Hour-long capacity refinements: overlap corrections and two-lane gains.

The renewal-balance capacity weights states by long-run occupancy. Over a
fixed horizon H the same accounting can be carried out collision by
collision: with N = (H/tau) * (L/(eta*v)) pair-step draws at probability p,
the expansion in powers of p gives

  term0  zero collisions:        (1 - N*p + N(N-1)/2 * p^2) * s_plus
  term1  one collision:          (1 - (N-1)*p) * N*p * (1 - T/H) * s_plus
  term2  two overlapping ones:   L*(v+c)/(12*v*c*H) * N(N-1)*p^2
                                 * (1 - T/H) * s_plus

whose sum collapses exactly to the factored form

  s_c = (1 - (T/tau)*(L/(eta*v))*p
           + (T/H - 1/2 + L*(v+c)/(12*v*c*H) * (1 - T/H)) * N(N-1)*p^2)
        * s_plus

(c is the magnitude of the blockage shock-wave speed). Keeping only the
linear term gives the one-hour baseline (1 - (T*L)/(tau*eta*v) * p) * s_plus,
floored at zero.

With two lanes, a blocked lane borrows the other lane's capacity while the
other lane's blockage window leaves it empty at the blockage site; the
expected per-lane gain is p_l2 * Delta_s with p_l2 ~ (N*p)^2 and
Delta_s = T^2/(2*H^2) * s_plus (the exact form carries an (L-2D)/L factor
for the lane-change clearance D).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .analytics import (
    Policy,
    RoadConfig,
    clearance_time,
    collision_probability,
    full_capacity,
    jam_shockwave,
)

__all__ = [
    "OneHourCapacity",
    "OverlapCapacity",
    "TwoLaneCapacity",
    "ThroughputReport",
    "UnsupportedConfigError",
    "cic_one_hour",
    "cic_overlap",
    "throughput_two_lane",
    "compare_throughputs",
    "expected_collisions_per_hour",
    "EXTENSION_HEADER",
    "write_extension_csv",
    "read_extension_csv",
]

# beyond one expected collision per hour the truncated expansions drift
REGIME_COLLISIONS_PER_HOUR = 1.0


class UnsupportedConfigError(ValueError):
    """The road configuration does not support the requested extension."""


@dataclass(frozen=True)
class OneHourCapacity:
    """First-order hour-long capacity, floored at zero."""

    s: float
    floored: bool


@dataclass(frozen=True)
class OverlapCapacity:
    """Second-order hour-long capacity with the overlap correction.

    term0/term1/term2 are the zero-, one- and two-collision contributions;
    s is the factored closed form (their exact sum). out_of_regime marks
    more than one expected collision per hour.
    """

    s: float
    term0: float
    term1: float
    term2: float
    out_of_regime: bool

    @property
    def term_sum(self) -> float:
        return self.term0 + self.term1 + self.term2


@dataclass(frozen=True)
class TwoLaneCapacity:
    """Per-lane hour-long capacity with lane changing around blockages.

    gain uses the headline approximation p_l2 * T^2/(2H^2) * s_plus;
    gain_exact keeps the (L-2D)/L clearance factor. s = s_single + gain.
    """

    s: float
    s_single: float
    gain: float
    gain_exact: float
    p_l2: float
    delta_s: float
    out_of_regime: bool


@dataclass(frozen=True)
class ThroughputReport:
    """The three hour-long capacity readings at one operating point."""

    v: float
    eta: float
    s_plus: float
    s_baseline: float
    s_overlap: float
    s_two_lane: float
    floored: bool
    out_of_regime: bool


def expected_collisions_per_hour(
    policy: Policy, road: RoadConfig, l: float, sigma_o: float
) -> float:
    """N*p over one hour: pair-step draws times per-draw probability."""
    p = collision_probability(policy, l, sigma_o)
    n_draws = (road.H / road.tau) * (road.L / (policy.eta * policy.v))
    return n_draws * p


def cic_one_hour(
    policy: Policy, road: RoadConfig, l: float, sigma_o: float
) -> OneHourCapacity:
    """First-order capacity over the horizon: each of the expected
    (H/tau)(L/(eta v)) p collisions removes T/H of the hour's output."""
    p = collision_probability(policy, l, sigma_o)
    T = clearance_time(road, policy.v)
    s_plus = full_capacity(policy)
    s = (1.0 - (T / road.tau) * (road.L / (policy.eta * policy.v)) * p) * s_plus
    if s < 0.0:
        return OneHourCapacity(s=0.0, floored=True)
    return OneHourCapacity(s=s, floored=False)


def cic_overlap(
    policy: Policy, road: RoadConfig, l: float, sigma_o: float
) -> OverlapCapacity:
    """Second-order capacity: the p^2 term credits overlapping blockage
    windows (two collisions close in time and space share their downtime)."""
    if policy.v * policy.eta <= l:
        raise UnsupportedConfigError(
            "v*eta must exceed l for a defined blockage wave"
        )
    p = collision_probability(policy, l, sigma_o)
    T = clearance_time(road, policy.v)
    s_plus = full_capacity(policy)
    v = policy.v
    c = abs(jam_shockwave(policy, l))
    H, tau, L = road.H, road.tau, road.L
    N = (H / tau) * (L / (policy.eta * v))
    if T > H:
        raise UnsupportedConfigError("clearance time exceeding the horizon H")
    a_pos = L * (v + c) / (12.0 * v * c * H)

    term0 = (1.0 - N * p + 0.5 * N * (N - 1.0) * p * p) * s_plus
    term1 = (1.0 - (N - 1.0) * p) * N * p * (1.0 - T / H) * s_plus
    term2 = a_pos * N * (N - 1.0) * p * p * (1.0 - T / H) * s_plus
    s = (
        1.0
        - (T / tau) * (L / (policy.eta * v)) * p
        + (T / H - 0.5 + a_pos * (1.0 - T / H)) * N * (N - 1.0) * p * p
    ) * s_plus
    return OverlapCapacity(
        s=s,
        term0=term0,
        term1=term1,
        term2=term2,
        out_of_regime=N * p > REGIME_COLLISIONS_PER_HOUR,
    )


def throughput_two_lane(
    policy: Policy, road: RoadConfig, l: float, sigma_o: float
) -> TwoLaneCapacity:
    """Per-lane capacity of a two-lane road where queued vehicles may slip
    around a blockage through the other lane while that lane is swept empty
    by its own blockage window."""
    if road.n_lanes != 2:
        raise UnsupportedConfigError("two-lane throughput needs n_lanes = 2")
    if 2.0 * road.D > 0.1 * road.L:
        raise UnsupportedConfigError(
            "lane-change clearance D too large for the segment (2D > 0.1 L)"
        )
    base = cic_overlap(policy, road, l, sigma_o)
    p = collision_probability(policy, l, sigma_o)
    s_plus = full_capacity(policy)
    H = road.H
    T = clearance_time(road, policy.v)
    N = (H / road.tau) * (road.L / (policy.eta * policy.v))
    p_l2 = (N * p) ** 2
    delta_s = T * T / (2.0 * H * H) * s_plus
    gain = p_l2 * delta_s
    gain_exact = gain * (road.L - 2.0 * road.D) / road.L
    return TwoLaneCapacity(
        s=base.s + gain,
        s_single=base.s,
        gain=gain,
        gain_exact=gain_exact,
        p_l2=p_l2,
        delta_s=delta_s,
        out_of_regime=base.out_of_regime,
    )


def compare_throughputs(
    policy: Policy, road: RoadConfig, l: float, sigma_o: float
) -> ThroughputReport:
    """Baseline, overlap-corrected and two-lane capacities side by side.
    Uses a two-lane copy of the road for the lane-change reading."""
    two = road if road.n_lanes == 2 else RoadConfig(
        L=road.L, tau=road.tau, tct=road.tct, n_lanes=2, D=road.D, H=road.H
    )
    base = cic_one_hour(policy, road, l, sigma_o)
    overlap = cic_overlap(policy, road, l, sigma_o)
    lane2 = throughput_two_lane(policy, two, l, sigma_o)
    return ThroughputReport(
        v=policy.v,
        eta=policy.eta,
        s_plus=full_capacity(policy),
        s_baseline=base.s,
        s_overlap=overlap.s,
        s_two_lane=lane2.s,
        floored=base.floored,
        out_of_regime=overlap.out_of_regime,
    )


EXTENSION_HEADER = ["eta", "s_baseline", "s_overlap", "s_two_lane"]


def write_extension_csv(reports: Sequence[ThroughputReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EXTENSION_HEADER)
        for r in reports:
            w.writerow(
                [f"{r.eta:.9g}", f"{r.s_baseline:.9g}", f"{r.s_overlap:.9g}",
                 f"{r.s_two_lane:.9g}"]
            )


def read_extension_csv(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != EXTENSION_HEADER:
            raise ValueError(f"unexpected extension header: {header}")
        return [dict(zip(EXTENSION_HEADER, map(float, row))) for row in r]
