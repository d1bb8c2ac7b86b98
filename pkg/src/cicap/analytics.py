"""Closed-form collision-inclusive capacity analysis.

Chains the stochastic inter-vehicle distance model into lane capacity:

  p        probability one following pair closes below the vehicle length
           within one headway: Phi((l - v*eta) / (v*sigma_o*sqrt(eta)))
  P        road-level collision rate: L/(v*eta) simultaneous pairs, each at p
  s_plus   collision-free capacity 1/eta
  c        shock-wave speed from flow/density jumps across the blockage
  T        traffic-clearance time (fixed, or linear in speed)
  lambda   long-run share of time in the abnormal (blocked) state,
           1 / (1 + tau/(T*P)) from the renewal balance
  s        collision-inclusive capacity (1 - lambda) * s_plus

All speeds m/s, times s, lengths m, flows veh/s. The deep left tail is
evaluated through scipy's ndtr/log_ndtr, which stay relatively accurate to
the underflow limit; log10_collision_probability is exact in log space far
below p = 1e-300.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy.optimize import brentq
from scipy.special import log_ndtr, ndtr

__all__ = [
    "Policy",
    "ClearanceModel",
    "RoadConfig",
    "TrafficState",
    "CapacityReport",
    "DegenerateStateError",
    "collision_probability",
    "log10_collision_probability",
    "collision_rate",
    "full_capacity",
    "shockwave_speed",
    "jam_shockwave",
    "clearance_time",
    "abnormal_weight",
    "occupancy_from_balance",
    "cic",
    "cic_surface",
    "SURFACE_HEADER",
    "write_surface_csv",
    "read_surface_csv",
]

_LN10 = math.log(10.0)


class DegenerateStateError(ValueError):
    """Traffic states coincide; the wave speed is undefined."""


@dataclass(frozen=True)
class Policy:
    """Operating point of the automated fleet: cruise speed and headway."""

    v: float
    eta: float

    def __post_init__(self):
        if self.v <= 0:
            raise ValueError("v must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class ClearanceModel:
    """Traffic-clearance time T as a function of the operating speed.

    The linear model grows from t0 at standstill by slope seconds per (m/s),
    clamped into [t_min, t_max]; the fixed model returns a constant.
    """

    kind: str = "linear"
    fixed_s: float = 2700.0
    t0: float = 1800.0
    slope: float = 1800.0 / (120.0 / 3.6)  # reaches 3600 s at 120 km/h
    t_min: float = 1800.0
    t_max: float = 3600.0

    def __post_init__(self):
        if self.kind not in ("linear", "fixed"):
            raise ValueError(f"unknown clearance model kind {self.kind!r}")
        if self.kind == "fixed" and self.fixed_s <= 0:
            raise ValueError("fixed clearance time must be positive")

    @classmethod
    def linear(cls) -> "ClearanceModel":
        return cls(kind="linear")

    @classmethod
    def fixed(cls, seconds: float) -> "ClearanceModel":
        return cls(kind="fixed", fixed_s=seconds)

    def __call__(self, v: float) -> float:
        if self.kind == "fixed":
            return self.fixed_s
        return min(max(self.t0 + self.slope * v, self.t_min), self.t_max)


@dataclass(frozen=True)
class RoadConfig:
    """Road segment under study.

    L        segment length (m)
    tau      operational time step / normal-state sojourn step (s)
    tct      clearance-time model
    n_lanes  1 or 2
    D        lane-change clearance margin around a blockage (m)
    H        study horizon for the hour-long formulas (s)
    """

    L: float = 5000.0
    tau: float = 0.1
    tct: ClearanceModel = field(default_factory=ClearanceModel.linear)
    n_lanes: int = 1
    D: float = 15.0
    H: float = 3600.0

    def __post_init__(self):
        if self.L <= 0 or self.tau <= 0 or self.H <= 0:
            raise ValueError("L, tau and H must be positive")
        if self.n_lanes not in (1, 2):
            raise ValueError("n_lanes must be 1 or 2")
        if self.D < 0:
            raise ValueError("D must be non-negative")


@dataclass(frozen=True)
class TrafficState:
    """A point on the flow-density diagram."""

    q: float
    rho: float


@dataclass(frozen=True)
class CapacityReport:
    """Full capacity chain at one operating point."""

    v: float
    eta: float
    p: float
    log10_p: float
    P: float
    s_plus: float
    lam: float
    s: float
    T: float
    c: float  # signed shock-wave speed; nan when v*eta <= l


def _z_value(policy: Policy, l: float, sigma_o: float) -> float:
    return (l - policy.v * policy.eta) / (policy.v * sigma_o * math.sqrt(policy.eta))


def collision_probability(policy: Policy, l: float, sigma_o: float) -> float:
    """Probability that the realized distance ahead falls below the vehicle
    length within one headway draw."""
    if l <= 0:
        raise ValueError("l must be positive")
    if sigma_o < 0:
        raise ValueError("sigma_o must be non-negative")
    if sigma_o == 0.0:
        d = policy.v * policy.eta
        return 0.5 if d == l else (1.0 if d < l else 0.0)
    return float(ndtr(_z_value(policy, l, sigma_o)))


def log10_collision_probability(policy: Policy, l: float, sigma_o: float) -> float:
    """log10 of collision_probability, exact in log space deep in the tail."""
    if l <= 0:
        raise ValueError("l must be positive")
    if sigma_o <= 0:
        raise ValueError("sigma_o must be positive for a log-space tail")
    return float(log_ndtr(_z_value(policy, l, sigma_o))) / _LN10


def collision_rate(policy: Policy, road: RoadConfig, l: float, sigma_o: float) -> float:
    """Expected simultaneous collisions on the segment: L/(v*eta) pairs at p.
    Not clamped to [0, 1]; the occupancy formula absorbs any magnitude."""
    return road.L / (policy.v * policy.eta) * collision_probability(policy, l, sigma_o)


def full_capacity(policy: Policy) -> float:
    """Collision-free (saturation) capacity 1/eta in veh/s."""
    return 1.0 / policy.eta


def shockwave_speed(normal: TrafficState, blocked: TrafficState) -> float:
    """Interface speed between two traffic states: (q_n - q_b)/(rho_n - rho_b).
    Negative means the interface moves upstream."""
    if normal.rho == blocked.rho:
        raise DegenerateStateError("states share one density; wave speed undefined")
    return (normal.q - blocked.q) / (normal.rho - blocked.rho)


def jam_shockwave(policy: Policy, l: float) -> float:
    """Shock-wave speed of a full stop behind a blockage: the normal state is
    (1/eta, 1/(v*eta)), the blocked state is zero flow at density 1/l."""
    normal = TrafficState(q=1.0 / policy.eta, rho=1.0 / (policy.v * policy.eta))
    blocked = TrafficState(q=0.0, rho=1.0 / l)
    return shockwave_speed(normal, blocked)


def clearance_time(road: RoadConfig, v: float) -> float:
    """Time from a collision until the blocked traffic state is cleared."""
    return road.tct(v)


def abnormal_weight(policy: Policy, road: RoadConfig, l: float, sigma_o: float) -> float:
    """Long-run fraction of time the road spends in the abnormal state:
    lambda = 1 / (1 + tau/(T*P)); 0 when collisions never happen."""
    P = collision_rate(policy, road, l, sigma_o)
    if P == 0.0:
        return 0.0
    T = clearance_time(road, policy.v)
    return 1.0 / (1.0 + road.tau / (T * P))


def occupancy_from_balance(P: float, T: float, tau: float) -> float:
    """Abnormal-state occupancy solved numerically from the renewal balance
    lam = (1 - lam) * (T/tau) * P. Self-check companion to abnormal_weight."""
    if P < 0 or T <= 0 or tau <= 0:
        raise ValueError("need P >= 0, T > 0, tau > 0")
    if P == 0.0:
        return 0.0
    g = lambda lam: lam - (1.0 - lam) * (T / tau) * P
    return float(brentq(g, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16))


def cic(policy: Policy, road: RoadConfig, l: float, sigma_o: float) -> CapacityReport:
    """Collision-inclusive capacity and every intermediate of the chain."""
    p = collision_probability(policy, l, sigma_o)
    log10_p = (
        log10_collision_probability(policy, l, sigma_o)
        if sigma_o > 0
        else (math.log10(p) if p > 0 else -math.inf)
    )
    P = road.L / (policy.v * policy.eta) * p
    T = clearance_time(road, policy.v)
    s_plus = full_capacity(policy)
    lam = 0.0 if P == 0.0 else 1.0 / (1.0 + road.tau / (T * P))
    s = s_plus / (1.0 + (T / road.tau) * P)
    c = jam_shockwave(policy, l) if policy.v * policy.eta > l else math.nan
    return CapacityReport(
        v=policy.v, eta=policy.eta, p=p, log10_p=log10_p, P=P,
        s_plus=s_plus, lam=lam, s=s, T=T, c=c,
    )


def cic_surface(
    v_grid: Sequence[float],
    eta_grid: Sequence[float],
    road: RoadConfig,
    l: float,
    sigma_o: float,
) -> list[CapacityReport]:
    """Capacity reports over the (v, eta) grid, row-major in v then eta."""
    if len(v_grid) == 0 or len(eta_grid) == 0:
        raise ValueError("v_grid and eta_grid must be non-empty")
    return [
        cic(Policy(v=float(v), eta=float(e)), road, l, sigma_o)
        for v in v_grid
        for e in eta_grid
    ]


SURFACE_HEADER = ["v", "eta", "p", "log10_p", "P", "s_plus", "lambda", "s", "T"]


def write_surface_csv(reports: Sequence[CapacityReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SURFACE_HEADER)
        for r in reports:
            w.writerow(
                [
                    f"{r.v:.9g}", f"{r.eta:.9g}", f"{r.p:.9g}", f"{r.log10_p:.9g}",
                    f"{r.P:.9g}", f"{r.s_plus:.9g}", f"{r.lam:.9g}", f"{r.s:.9g}",
                    f"{r.T:.9g}",
                ]
            )


def read_surface_csv(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != SURFACE_HEADER:
            raise ValueError(f"unexpected surface header: {header}")
        return [dict(zip(SURFACE_HEADER, map(float, row))) for row in r]
