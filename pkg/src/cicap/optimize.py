"""Optimal operating policies under safety and demand constraints.

Two dual problems over the policy space (v, eta):

  maximize_capacity    max s(v, eta)  s.t.  p(v, eta) <= p_hat
  minimize_collision   min p(v, eta)  s.t.  s(v, eta) >= s_hat

Both reduce along eta first. The capacity problem's optimal headway is
eta_dagger = max(eta_hat, eta_star): eta_hat inverts the safety bound in
closed form (a quadratic in sqrt(eta)); eta_star is the interior stationary
point of s in eta, found as the right root of -p'(eta) = v*tau/(T*L) in log
space. The collision problem pushes the headway to the largest value that
still meets demand (eta_r, on the decreasing branch of s). In both problems
the objective then improves monotonically in v, so the optimal speed is the
top of the allowed range.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ndtri

from .analytics import (
    CapacityReport,
    Policy,
    RoadConfig,
    cic,
    clearance_time,
)

__all__ = [
    "SafetyConstraint",
    "DemandConstraint",
    "OptimizationResult",
    "CriticalHeadway",
    "CurvePoint",
    "eta_hat",
    "eta_star",
    "optimal_headway_capacity",
    "maximize_capacity",
    "eta_r",
    "minimize_collision",
    "ETA_CAP",
    "CURVE_HEADER",
    "write_curve_csv",
    "read_curve_csv",
]

# headway values beyond this are never useful: demand this low is reported
# as capped rather than solved for
ETA_CAP = 120.0

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

BINDING_CONSTRAINT = "constraint-binding"
BINDING_INTERIOR = "interior-stationary"
BINDING_CAPACITY_ROOT = "capacity-root"


@dataclass(frozen=True)
class SafetyConstraint:
    """Upper bound on the per-pair collision probability."""

    p_hat: float

    def __post_init__(self):
        if not 0.0 < self.p_hat < 1.0:
            raise ValueError("p_hat must lie in (0, 1)")


@dataclass(frozen=True)
class DemandConstraint:
    """Lower bound on collision-inclusive capacity (veh/s)."""

    s_hat: float

    def __post_init__(self):
        if self.s_hat <= 0.0:
            raise ValueError("s_hat must be positive")


@dataclass(frozen=True)
class CriticalHeadway:
    """Largest headway meeting a demand floor at one speed.

    feasible is False when the demand exceeds the best capacity at this
    speed (s_max carries that best value); capped marks demand so low the
    headway ran into ETA_CAP.
    """

    eta: float | None
    feasible: bool
    capped: bool
    s_max: float


@dataclass(frozen=True)
class CurvePoint:
    """Optimal-headway capacity at one speed of the scan range."""

    v: float
    eta_dagger: float
    binding: str
    p: float
    s: float


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of a policy optimization.

    status is "optimal" or "infeasible"; infeasible results carry the best
    attainable objective bound in s_max and no report. binding explains
    which mechanism fixed the headway at the optimum.
    """

    objective: str
    status: str
    v_opt: float | None
    eta_opt: float | None
    binding: str | None
    report: CapacityReport | None
    s_max: float | None = None
    curve: tuple[CurvePoint, ...] = ()


def eta_hat(v: float, p_hat: float, l: float, sigma_o: float) -> float:
    """Headway at which the collision probability equals p_hat exactly.

    Solving Phi((l - v*eta)/(v*sigma_o*sqrt(eta))) = p_hat for eta is a
    quadratic in u = sqrt(eta): v*u^2 + z*v*sigma_o*u - l = 0 with
    z = Phi^{-1}(p_hat); the positive root is unique.
    """
    if v <= 0 or l <= 0 or sigma_o <= 0:
        raise ValueError("need v > 0, l > 0, sigma_o > 0")
    if not 0.0 < p_hat < 1.0:
        raise ValueError("p_hat must lie in (0, 1)")
    z = float(ndtri(p_hat))
    u = 0.5 * (-z * sigma_o + math.sqrt(z * z * sigma_o * sigma_o + 4.0 * l / v))
    return u * u


def _log_neg_dp_deta(eta: float, v: float, l: float, sigma_o: float) -> float:
    """ln of -dp/deta = phi(z) * (l/(v*eta) + 1) / (2*sigma_o*sqrt(eta)),
    evaluated in log space so the deep tail stays finite."""
    z = (l - v * eta) / (v * sigma_o * math.sqrt(eta))
    return (
        -0.5 * z * z
        - _LOG_SQRT_2PI
        + math.log((l / (v * eta) + 1.0) / (2.0 * sigma_o * math.sqrt(eta)))
    )


def eta_star(
    v: float,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    eta_max: float = ETA_CAP,
) -> float | None:
    """Interior stationary headway of s(v, .), or None when there is none.

    1/s = eta + (T*L/(v*tau)) * p(eta), so stationarity means
    -p'(eta) = v*tau/(T*L). -p' vanishes at both ends of (0, inf) with a
    single interior peak, leaving zero or two roots; the right root (where
    1/s stops decreasing) is the capacity maximizer and is the one returned.
    """
    if v <= 0 or l <= 0 or sigma_o <= 0:
        raise ValueError("need v > 0, l > 0, sigma_o > 0")
    T = clearance_time(road, v)
    target = math.log(v * road.tau / (T * road.L))
    g = lambda eta: _log_neg_dp_deta(eta, v, l, sigma_o) - target
    peak = minimize_scalar(
        lambda eta: -_log_neg_dp_deta(eta, v, l, sigma_o),
        bounds=(1e-9, eta_max),
        method="bounded",
        options={"xatol": 1e-12},
    ).x
    if g(peak) < 0.0:
        return None  # -p' never reaches the slope target: no stationary point
    if g(eta_max) > 0.0:
        return None  # s still rising at the cap; treat as no interior optimum
    return float(brentq(g, peak, eta_max, xtol=1e-12, rtol=8.9e-16))


def optimal_headway_capacity(
    v: float, p_hat: float, road: RoadConfig, l: float, sigma_o: float
) -> tuple[float, str]:
    """Capacity-optimal headway at speed v under the safety bound.

    Returns (eta_dagger, binding): the larger of the safety headway and the
    interior stationary headway wins, tagged accordingly.
    """
    e_hat = eta_hat(v, p_hat, l, sigma_o)
    e_star = eta_star(v, road, l, sigma_o)
    if e_star is not None and e_star > e_hat:
        return e_star, BINDING_INTERIOR
    return e_hat, BINDING_CONSTRAINT


def maximize_capacity(
    v_range: tuple[float, float],
    safety: SafetyConstraint,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    n_curve: int = 0,
) -> OptimizationResult:
    """Maximize collision-inclusive capacity over v in v_range under the
    safety bound. The per-speed optimum improves with speed, so the optimal
    speed is v_max; set n_curve > 1 to also tabulate the per-speed curve."""
    v_min, v_max = v_range
    if not 0 < v_min <= v_max:
        raise ValueError("need 0 < v_min <= v_max")
    eta_opt, binding = optimal_headway_capacity(v_max, safety.p_hat, road, l, sigma_o)
    report = cic(Policy(v=v_max, eta=eta_opt), road, l, sigma_o)
    curve: list[CurvePoint] = []
    if n_curve > 1:
        for v in np.linspace(v_min, v_max, n_curve):
            e, b = optimal_headway_capacity(float(v), safety.p_hat, road, l, sigma_o)
            r = cic(Policy(v=float(v), eta=e), road, l, sigma_o)
            curve.append(CurvePoint(v=float(v), eta_dagger=e, binding=b, p=r.p, s=r.s))
    return OptimizationResult(
        objective="capacity",
        status="optimal",
        v_opt=v_max,
        eta_opt=eta_opt,
        binding=binding,
        report=report,
        curve=tuple(curve),
    )


def _capacity(v: float, eta: float, road: RoadConfig, l: float, sigma_o: float) -> float:
    return cic(Policy(v=v, eta=eta), road, l, sigma_o).s


def eta_r(
    v: float,
    s_hat: float,
    road: RoadConfig,
    l: float,
    sigma_o: float,
    eta_cap: float = ETA_CAP,
) -> CriticalHeadway:
    """Largest headway at speed v whose capacity still meets s_hat.

    Found on the decreasing branch of s (to the right of the capacity peak)
    by doubling then Brent. Demand above the peak capacity is infeasible;
    demand so low that the headway passes eta_cap is reported capped.
    """
    if s_hat <= 0:
        raise ValueError("s_hat must be positive")
    e_star = eta_star(v, road, l, sigma_o, eta_max=eta_cap)
    if e_star is None:
        # no interior peak: scan for the best headway on a log grid
        grid = np.geomspace(1e-6, eta_cap, 512)
        vals = [_capacity(v, float(e), road, l, sigma_o) for e in grid]
        e_star = float(grid[int(np.argmax(vals))])
    s_peak = _capacity(v, e_star, road, l, sigma_o)
    if s_hat > s_peak:
        return CriticalHeadway(eta=None, feasible=False, capped=False, s_max=s_peak)
    lo = e_star
    hi = e_star
    while _capacity(v, hi, road, l, sigma_o) >= s_hat:
        if hi >= eta_cap:
            return CriticalHeadway(eta=eta_cap, feasible=True, capped=True, s_max=s_peak)
        lo = hi
        hi = min(hi * 2.0, eta_cap)
    root = brentq(
        lambda e: _capacity(v, e, road, l, sigma_o) - s_hat,
        lo,
        hi,
        xtol=1e-12,
        rtol=8.9e-16,
    )
    return CriticalHeadway(eta=float(root), feasible=True, capped=False, s_max=s_peak)


def minimize_collision(
    v_range: tuple[float, float],
    demand: DemandConstraint,
    road: RoadConfig,
    l: float,
    sigma_o: float,
) -> OptimizationResult:
    """Minimize the collision probability over v in v_range subject to the
    demand floor. At each speed the safest feasible headway is eta_r; the
    resulting probability falls with speed, so the optimal speed is v_max.
    Infeasible demand returns a value carrying the best attainable capacity."""
    v_min, v_max = v_range
    if not 0 < v_min <= v_max:
        raise ValueError("need 0 < v_min <= v_max")
    crit = eta_r(v_max, demand.s_hat, road, l, sigma_o)
    if not crit.feasible:
        return OptimizationResult(
            objective="safety",
            status="infeasible",
            v_opt=None,
            eta_opt=None,
            binding=None,
            report=None,
            s_max=crit.s_max,
        )
    report = cic(Policy(v=v_max, eta=crit.eta), road, l, sigma_o)
    return OptimizationResult(
        objective="safety",
        status="optimal",
        v_opt=v_max,
        eta_opt=crit.eta,
        binding=BINDING_CAPACITY_ROOT,
        report=report,
        s_max=crit.s_max,
    )


CURVE_HEADER = ["v", "eta_dagger", "binding", "p", "s"]


def write_curve_csv(curve: Sequence[CurvePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for pt in curve:
            w.writerow(
                [f"{pt.v:.9g}", f"{pt.eta_dagger:.9g}", pt.binding,
                 f"{pt.p:.9g}", f"{pt.s:.9g}"]
            )


def read_curve_csv(path) -> list[CurvePoint]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != CURVE_HEADER:
            raise ValueError(f"unexpected curve header: {header}")
        return [
            CurvePoint(
                v=float(row[0]), eta_dagger=float(row[1]), binding=row[2],
                p=float(row[3]), s=float(row[4]),
            )
            for row in r
        ]
