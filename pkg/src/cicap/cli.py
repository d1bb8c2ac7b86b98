"""Command-line interface.

Subcommands
    simulate        one leader/follower pair -> trajectory CSV + gap fit
    table1          Gaussian-fit NRMSE over noise-variance combinations -> CSV
    sweep-variance  gap-variance sweep + candidate-form fits -> CSV/JSON
    capacity        capacity chain at a point (JSON) or over a grid (CSV)
    optimize        headway/speed optimization -> JSON (+ curve CSV)
    validate        Monte Carlo checks (semi-markov / spacetime / compare)
    ingest          filter + normalize car-following records -> CSV/JSON

Quantities accept unit suffixes: speeds `kmh` or `ms` (bare = m/s), demands
`vph` (bare = veh/s). Grids are comma lists (`20kmh,30kmh`) or linspace
ranges `a:b:n` (`20:100:9kmh`, n points inclusive). Clearance models are
`linear` or `fixed:SECONDS`.

Exit status: 0 on success (including a well-formed infeasible optimization),
2 on usage errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import analytics, extensions, ingest, optimize, simcore, stats, validate

__all__ = ["main", "build_parser"]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Argument parsing helpers.


def _speed(tok: str) -> float:
    """Speed in m/s from '50kmh', '13.9ms' or bare m/s."""
    tok = tok.strip()
    if tok.endswith("kmh"):
        return float(tok[:-3]) / 3.6
    if tok.endswith("ms"):
        return float(tok[:-2])
    return float(tok)


def _demand(tok: str) -> float:
    """Flow in veh/s from '1200vph' or bare veh/s."""
    tok = tok.strip()
    if tok.endswith("vph"):
        return float(tok[:-3]) / 3600.0
    return float(tok)


def _scalar(tok: str) -> float:
    return float(tok)


def _grid(tok: str, conv=_scalar, suffixes: tuple[str, ...] = ()) -> list[float]:
    """Comma list or 'a:b:n' linspace (n points, endpoints inclusive). In
    range form a unit suffix may sit on any part and applies to both ends."""
    tok = tok.strip()
    if ":" in tok:
        a, b, n = (part.strip() for part in tok.split(":"))
        suffix = ""
        for s in suffixes:
            if a.endswith(s) or b.endswith(s) or n.endswith(s):
                suffix = s
                break
        a, b, n = (x[: -len(suffix)] if suffix and x.endswith(suffix) else x
                   for x in (a, b, n))
        count = int(n)
        if count < 1:
            raise ValueError("grid needs at least one point")
        lo, hi = conv(a + suffix), conv(b + suffix)
        return [float(x) for x in np.linspace(lo, hi, count)]
    return [conv(part) for part in tok.split(",") if part.strip()]


def _speed_grid(tok: str) -> list[float]:
    return _grid(tok, conv=_speed, suffixes=("kmh", "ms"))


def _tct(tok: str) -> analytics.ClearanceModel:
    tok = tok.strip()
    if tok == "linear":
        return analytics.ClearanceModel.linear()
    if tok.startswith("fixed:"):
        return analytics.ClearanceModel.fixed(float(tok.split(":", 1)[1]))
    raise ValueError(f"clearance model must be 'linear' or 'fixed:SECONDS', got {tok!r}")


def _road(args) -> analytics.RoadConfig:
    return analytics.RoadConfig(
        L=args.L,
        tau=args.tau,
        tct=_tct(args.tct),
        n_lanes=getattr(args, "lanes", 1) or 1,
        D=getattr(args, "D", 15.0) or 15.0,
        H=getattr(args, "horizon", None) or 3600.0,
    )


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, default=float) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _add_road_args(p: argparse.ArgumentParser, horizon: bool = False) -> None:
    p.add_argument("--L", type=float, default=5000.0, help="segment length (m)")
    p.add_argument("--tau", type=float, default=0.1, help="unit interval (s)")
    p.add_argument(
        "--tct", default="linear", help="clearance model: linear | fixed:SECONDS"
    )
    p.add_argument("--D", type=float, default=15.0, help="lane-change clearance (m)")
    if horizon:
        p.add_argument("--horizon", type=float, default=3600.0, help="window (s)")


def _add_noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma-d", type=float, default=0.0, help="gap observation noise (m)")
    p.add_argument("--sigma-dv", type=float, default=0.0, help="closing-speed noise (m/s)")
    p.add_argument("--sigma-acc", type=float, default=0.0, help="acceleration noise (m/s^2)")
    p.add_argument(
        "--sigma-o", type=float, default=0.05, help="per-unit-interval drift scale"
    )


# ---------------------------------------------------------------------------
# Subcommand implementations.


def _fit_payload(fit: stats.GaussianFit, err: float) -> dict:
    return {"mu": fit.mu, "var": fit.sigma**2, "n": fit.n, "nrmse": err}


def _cmd_simulate(args) -> int:
    veh = simcore.VehicleSpec(h0=args.eta, v0=_speed(args.v0))
    noise = simcore.NoiseSpec(
        sigma_d=args.sigma_d,
        sigma_dv=args.sigma_dv,
        sigma_acc=args.sigma_acc,
        sigma_o=args.sigma_o,
    )
    traj = simcore.simulate_pair(
        veh, noise, _speed(args.v_lead), args.duration, args.dt, seed=args.seed
    )
    simcore.write_trajectory_csv(traj, args.out)
    log.info(
        "wrote %d samples to %s (gap variance %.6g)",
        len(traj.t),
        args.out,
        simcore.gap_variance(traj),
    )
    stem = os.path.splitext(args.out)[0]
    hist_path = args.hist_out or f"{stem}.hist.csv"
    fit_path = args.fit_out or f"{stem}.fit.json"
    body = simcore.post_warmup(traj.gap)
    try:
        hist, fit, expected, err = stats.gaussian_fit_nrmse(body, n_bins=args.bins)
    except stats.DegenerateRangeError as exc:
        log.warning("gap distribution is degenerate (%s); fit outputs skipped", exc)
        return 0
    stats.write_histogram_csv(hist, expected, hist_path)
    _write_json(_fit_payload(fit, err), fit_path)
    print(f"fit: n={fit.n} mu={fit.mu:.9g} var={fit.sigma**2:.9g} nrmse={err:.9g}")
    return 0


TABLE1_HEADER = ["var_d", "var_dv", "var_acc", "nrmse", "n_samples", "n_runs", "seed"]


def _table1_cell(task) -> tuple:
    veh, variances, base, idx, reps, v_lead, duration, dt = task
    var_d, var_dv, var_acc = variances
    noise = simcore.NoiseSpec(
        sigma_d=math.sqrt(var_d),
        sigma_dv=math.sqrt(var_dv),
        sigma_acc=math.sqrt(var_acc),
    )
    parts = [
        simcore.post_warmup(
            simcore.simulate_pair(
                veh, noise, v_lead, duration, dt,
                seed=np.random.SeedSequence([base, idx, rep]),
            ).gap
        )
        for rep in range(reps)
    ]
    pooled = np.concatenate(parts)
    _, _, _, err = stats.gaussian_fit_nrmse(pooled, n_bins=100)
    return (var_d, var_dv, var_acc, err, len(pooled))


def _cmd_table1(args) -> int:
    veh = simcore.VehicleSpec()
    levels = _grid(args.sigma_set)
    if any(level <= 0 for level in levels):
        raise ValueError("--sigma-set variances must be positive")
    if args.reps < 1:
        raise ValueError("--reps must be at least 1")
    v_lead = _speed(args.v_lead)
    tasks = [
        (veh, combo, args.seed, idx, args.reps, v_lead, args.duration, args.dt)
        for idx, combo in enumerate(itertools.product(levels, levels, levels))
    ]
    rows = _map_tasks(_table1_cell, tasks, args.threads)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE1_HEADER)
        for var_d, var_dv, var_acc, err, n in rows:
            w.writerow(
                [
                    f"{var_d:.9g}",
                    f"{var_dv:.9g}",
                    f"{var_acc:.9g}",
                    f"{err:.9g}",
                    n,
                    args.reps,
                    args.seed,
                ]
            )
    log.info("wrote %d cells to %s", len(rows), args.out)
    return 0


def _sweep_task(task):
    veh, noise, base, iv, v, ie, eta, duration, dt = task
    return simcore.sweep_cell(veh, noise, base, iv, v, ie, eta, duration, dt)


def _map_tasks(fn, tasks, threads: int):
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, tasks, chunksize=1))
    return [fn(t) for t in tasks]


def _cmd_sweep_variance(args) -> int:
    veh = simcore.VehicleSpec(v0=_speed(args.v0))
    noise = simcore.NoiseSpec(
        sigma_d=args.sigma_d, sigma_dv=args.sigma_dv, sigma_acc=args.sigma_acc
    )
    v_grid = _speed_grid(args.v)
    eta_grid = _grid(args.eta)
    if args.reps < 1:
        raise ValueError("--reps must be >= 1")
    tasks = [
        (veh, noise, args.seed + rep, iv, v, ie, eta, args.duration, args.dt)
        for rep in range(args.reps)
        for iv, v in enumerate(v_grid)
        for ie, eta in enumerate(eta_grid)
    ]
    cells = _map_tasks(_sweep_task, tasks, args.threads)
    simcore.write_sweep_csv(cells, args.out)
    by_cell: dict = {}
    for c in cells:
        by_cell.setdefault((c.v, c.eta), []).append(c)
    vs, es, ys = [], [], []
    for (v, eta), group in by_cell.items():
        if any(c.collided for c in group):
            continue
        mean_var = float(np.mean([c.var_gap for c in group]))
        if mean_var > 0:
            vs.append(v)
            es.append(eta)
            ys.append(mean_var)
    payload: dict = {
        "cells": len(cells),
        "collided": sum(c.collided for c in cells),
        "kept": len(ys),
        "fits": {},
    }
    if len(ys) >= 3:
        fits = stats.fit_variance_forms(
            np.array(vs),
            np.array(es),
            np.array(ys),
            through_origin=args.through_origin,
        )
        best = max(fits.values(), key=lambda f: f.r2)
        payload["fits"] = {
            name: {"r2": f.r2, "c0": f.c0, "c1": f.c1} for name, f in fits.items()
        }
        payload["best_form"] = best.name
        payload["best_r2"] = best.r2
    _write_json(payload, args.fits)
    return 0


def _cmd_capacity(args) -> int:
    v_grid = _speed_grid(args.v)
    eta_grid = _grid(args.eta)
    road = _road(args)
    if len(v_grid) == 1 and len(eta_grid) == 1:
        report = analytics.cic(
            analytics.Policy(v=v_grid[0], eta=eta_grid[0]), road, args.l, args.sigma_o
        )
        _write_json(asdict(report), args.out)
        return 0
    if args.out in (None, "-"):
        raise ValueError("grid output is CSV; --out is required")
    reports = analytics.cic_surface(v_grid, eta_grid, road, args.l, args.sigma_o)
    analytics.write_surface_csv(reports, args.out)
    log.info("wrote %d points to %s", len(reports), args.out)
    return 0


def _cmd_optimize(args) -> int:
    road = _road(args)
    v_range = (_speed(args.v_min), _speed(args.v_max))
    if args.objective == "capacity":
        if args.p_hat is None:
            raise ValueError("--p-hat is required for the capacity objective")
        result = optimize.maximize_capacity(
            v_range,
            optimize.SafetyConstraint(p_hat=args.p_hat),
            road,
            args.l,
            args.sigma_o,
            n_curve=args.curve,
        )
    else:
        if args.s_hat is None:
            raise ValueError("--s-hat is required for the collision objective")
        result = optimize.minimize_collision(
            v_range,
            optimize.DemandConstraint(s_hat=_demand(args.s_hat)),
            road,
            args.l,
            args.sigma_o,
        )
    payload = {
        "objective": result.objective,
        "status": result.status,
        "v_opt": result.v_opt,
        "eta_opt": result.eta_opt,
        "binding": result.binding,
        "s_max": result.s_max,
        "report": asdict(result.report) if result.report else None,
    }
    _write_json(payload, args.out)
    if args.curve_out and result.curve:
        optimize.write_curve_csv(result.curve, args.curve_out)
    return 0


def _cmd_validate(args) -> int:
    if args.mode == "semi-markov":
        config = validate.SemiMarkovConfig(
            p_transition=args.p_transition,
            sojourn_normal=args.tau,
            sojourn_abnormal=args.T,
            horizon=args.horizon,
            seed=args.seed,
        )
        result = validate.run_semi_markov(config, n_runs=args.runs)
        _write_json(
            {
                "mode": "semi-markov",
                "occupancy_mean": result.occupancy.mean,
                "occupancy_stderr": result.occupancy.std_error,
                "capacity_fraction_mean": result.capacity_fraction.mean,
                "closed_form": validate.occupancy_closed_form(config),
                "n_runs": result.occupancy.n_runs,
            },
            args.out,
        )
        return 0
    policy = analytics.Policy(v=_speed(args.v), eta=args.eta)
    road = _road(args)
    if args.mode == "spacetime":
        result = validate.run_spacetime(
            policy,
            road,
            args.l,
            args.sigma_o,
            horizon=args.horizon,
            n_lanes=args.lanes,
            lane_change=args.lane_change,
            seed=args.seed,
            n_runs=args.runs,
        )
        if args.events_out:
            validate.write_events_csv(result.events, args.events_out)
        _write_json(
            {
                "mode": "spacetime",
                "throughput_mean": result.throughput.mean,
                "throughput_stderr": result.throughput.std_error,
                "n_runs": result.throughput.n_runs,
                "events": len(result.events),
                "per_run": list(result.per_run),
            },
            args.out,
        )
        return 0
    if args.mode == "compare":
        if args.compare_out:
            reports = [
                extensions.compare_throughputs(
                    analytics.Policy(v=policy.v, eta=eta), road, args.l, args.sigma_o
                )
                for eta in _grid(args.eta_grid)
            ]
            extensions.write_extension_csv(reports, args.compare_out)
            log.info("wrote %d comparison rows to %s", len(reports), args.compare_out)
        comparison = validate.compare_extension(
            policy,
            road,
            args.l,
            args.sigma_o,
            scenario=args.scenario,
            n_runs=args.runs,
            seed=args.seed,
        )
        if args.out in (None, "-"):
            _write_json(
                {
                    "scenario": comparison.scenario,
                    "analytic": comparison.analytic,
                    "mc_mean": comparison.mc_mean,
                    "mc_stderr": comparison.mc_stderr,
                    "n_runs": comparison.n_runs,
                    "rel_gap": comparison.rel_gap,
                },
                args.out,
            )
        else:
            validate.write_validation_json(comparison, args.out)
        return 0
    raise ValueError(f"unknown validation mode {args.mode!r}")


def _cmd_ingest(args) -> int:
    rejections: list[str] = []
    records = ingest.load_records(args.infile, rejections=rejections)
    spec = ingest.FilterSpec(
        v_lead_target=_speed(args.v_lead), v_lead_tol=args.tol, dv_max=args.dv_max
    )
    kept, summary = ingest.filter_report(records, spec, strict=args.strict)
    dropped: list[str] = []
    pooled = ingest.normalize_gaps(kept, min_samples=args.min_samples, dropped=dropped)
    with open(args.out, "w", newline="") as fh:
        fh.write("z\n")
        for z in pooled:
            fh.write(f"{z:.9g}\n")
    payload = {
        "filter": summary,
        "rejected_cases": rejections,
        "dropped_cases": dropped,
        "pooled_samples": int(len(pooled)),
        "pooled_mean": float(pooled.mean()) if len(pooled) else None,
        "pooled_std": float(pooled.std(ddof=0)) if len(pooled) else None,
    }
    if args.bins and len(pooled) >= 2:
        _, fit, _, err = stats.gaussian_fit_nrmse(pooled, n_bins=args.bins)
        payload["gaussian_fit"] = _fit_payload(fit, err)
    _write_json(payload, args.summary)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cicap",
        description="Collision-inclusive capacity analysis toolkit",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="one car-following pair -> trajectory CSV + gap fit"
    )
    p.add_argument("--v-lead", required=True, help="leader speed (e.g. 50kmh)")
    p.add_argument("--eta", type=float, default=1.5, help="time headway h0 (s)")
    p.add_argument("--v0", default="120kmh", help="desired speed")
    p.add_argument("--duration", type=float, default=600.0, help="simulated time (s)")
    p.add_argument("--dt", type=float, default=0.1, help="step (s)")
    _add_noise_args(p)
    p.add_argument("--bins", type=int, default=100, help="histogram bin count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.add_argument(
        "--hist-out", default=None, help="histogram CSV path (default: <out>.hist.csv)"
    )
    p.add_argument(
        "--fit-out", default=None, help="fit report JSON path (default: <out>.fit.json)"
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "table1", help="Gaussian-fit NRMSE over noise-variance combinations"
    )
    p.add_argument(
        "--sigma-set",
        default="0.1,0.5,1",
        help="noise variance levels; each of the three channels takes each level",
    )
    p.add_argument("--v-lead", default="50kmh", help="leader speed")
    p.add_argument("--duration", type=float, default=3600.0, help="seconds per run")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument(
        "--reps", type=int, default=20, help="runs pooled into each cell's histogram"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="NRMSE table CSV path")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("sweep-variance", help="variance sweep + shape fits")
    p.add_argument("--v", default="20:100:9kmh", help="speed grid")
    p.add_argument("--eta", default="1:5:9", help="headway grid (s)")
    p.add_argument(
        "--v0",
        default="240kmh",
        help="free speed; keep well above the top grid speed so the desired"
        " gap stays v*eta across the grid",
    )
    p.add_argument("--sigma-d", type=float, default=1.0, help="gap noise std (m)")
    p.add_argument(
        "--sigma-dv", type=float, default=1.0, help="closing-speed noise std (m/s)"
    )
    p.add_argument(
        "--sigma-acc", type=float, default=0.5, help="acceleration noise std (m/s^2)"
    )
    p.add_argument("--duration", type=float, default=3600.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument(
        "--reps", type=int, default=4, help="replications per cell (seed..seed+reps-1)"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--through-origin", action="store_true")
    p.add_argument("--out", required=True, help="sweep CSV path")
    p.add_argument("--fits", default=None, help="fit summary JSON (default stdout)")
    p.set_defaults(func=_cmd_sweep_variance)

    p = sub.add_parser("capacity", help="capacity chain at a point or grid")
    p.add_argument("--v", required=True, help="speed or grid")
    p.add_argument("--eta", required=True, help="headway or grid (s)")
    p.add_argument("--l", type=float, default=5.0, help="vehicle length (m)")
    p.add_argument("--sigma-o", type=float, default=0.05)
    _add_road_args(p)
    p.add_argument("--out", default=None, help="JSON (point) or CSV (grid) path")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("optimize", help="optimal headway/speed policies")
    p.add_argument(
        "--objective", choices=("capacity", "collision"), default="capacity"
    )
    p.add_argument("--v-min", default="5kmh")
    p.add_argument("--v-max", default="120kmh")
    p.add_argument("--p-hat", type=float, default=None, help="safety bound on p")
    p.add_argument("--s-hat", default=None, help="demand floor (e.g. 1200vph)")
    p.add_argument("--l", type=float, default=5.0)
    p.add_argument("--sigma-o", type=float, default=0.05)
    _add_road_args(p)
    p.add_argument("--curve", type=int, default=0, help="tabulate n per-speed points")
    p.add_argument("--curve-out", default=None, help="curve CSV path")
    p.add_argument("--out", default=None, help="result JSON (default stdout)")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("validate", help="Monte Carlo validation")
    p.add_argument(
        "--mode", choices=("semi-markov", "spacetime", "compare"), required=True
    )
    p.add_argument("--p-transition", type=float, default=1e-4)
    p.add_argument("--T", type=float, default=2700.0, help="abnormal sojourn (s)")
    p.add_argument("--v", default="50kmh")
    p.add_argument("--eta", type=float, default=1.5)
    p.add_argument("--l", type=float, default=5.0)
    p.add_argument("--sigma-o", type=float, default=0.05)
    p.add_argument("--lanes", type=int, default=1, choices=(1, 2))
    p.add_argument("--lane-change", action="store_true")
    p.add_argument(
        "--scenario",
        choices=("baseline", "overlap", "two-lane", "two-lane-gain"),
        default="baseline",
    )
    p.add_argument("--runs", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    _add_road_args(p, horizon=True)
    p.add_argument("--events-out", default=None, help="events CSV path")
    p.add_argument(
        "--compare-out",
        default=None,
        help="closed-form throughput comparison CSV over --eta-grid (compare mode)",
    )
    p.add_argument(
        "--eta-grid", default="1.5:5:15", help="headway grid for --compare-out (s)"
    )
    p.add_argument("--out", default=None, help="result JSON (default stdout)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("ingest", help="filter and normalize observed records")
    p.add_argument("--in", dest="infile", required=True, help="records CSV path")
    p.add_argument("--v-lead", required=True, help="target leader speed")
    p.add_argument("--tol", type=float, default=0.2, help="leader speed tolerance (m/s)")
    p.add_argument("--dv-max", type=float, default=1.0, help="max |dv| (m/s)")
    p.add_argument("--strict", action="store_true", help="drop whole cases on dv")
    p.add_argument("--min-samples", type=int, default=ingest.MIN_CASE_SAMPLES)
    p.add_argument("--bins", type=int, default=0, help="also fit a Gaussian")
    p.add_argument("--out", required=True, help="pooled samples CSV path")
    p.add_argument("--summary", default=None, help="summary JSON (default stdout)")
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ingest.SchemaError as exc:
        # an input file without the documented header is a usage problem
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        ValueError,
        OSError,
        simcore.SimulationError,
        ingest.IngestError,
        extensions.UnsupportedConfigError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
