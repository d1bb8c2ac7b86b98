#!/usr/bin/env python3
"""Render figures from the capacity toolkit's CSV outputs.

This is a display layer only.  It reads the documented CSV schemas produced
by the ``cicap`` command line tool, draws one figure per invocation, and
writes a raster or vector image.  It never recomputes any physics quantity
and never modifies its inputs.

Usage:
    python3 render.py --kind KIND --in FILE --out IMAGE

Figure kinds and the files they consume:
    hist_fit           gap histogram CSV from ``cicap simulate``
                       (bin_left, bin_right, count, expected_count)
    p_heatmap          capacity surface CSV from ``cicap capacity`` on a grid
                       (needs v, eta, log10_p); adds iso-distance guide lines
    cic_surface        the same surface CSV (needs v, eta, s); 3-D surface
                       plus a 2-D projection
    opt_curve          optimal-headway curve CSV from ``cicap optimize
                       --curve-out`` (v, eta_dagger, binding, p, s); the
                       constraint-binding branch is starred
    feasible_region    the surface CSV again (v, eta, s); shades the region
                       meeting a throughput floor given with --threshold
    extension_compare  comparison CSV from ``cicap validate --mode compare
                       --compare-out`` (eta, s_baseline, s_overlap,
                       s_two_lane)
"""

from __future__ import annotations

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

MPS_TO_KMH = 3.6
ISO_DISTANCES_M = (8.0, 28.0, 48.0, 68.0, 88.0, 108.0)


class SchemaError(ValueError):
    """An input file does not match the documented CSV schema."""


# ---------------------------------------------------------------------------
# Input handling.


def read_columns(path: str, required: tuple[str, ...]) -> dict[str, list[str]]:
    """Read a CSV file and return raw string columns keyed by header name.

    Raises SchemaError naming the first missing column when the header does
    not contain every required column.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read input ({exc})") from exc
    if not rows:
        raise SchemaError(f"{path}: empty file, expected columns {list(required)}")
    header = rows[0]
    for name in required:
        if name not in header:
            raise SchemaError(f"{path}: missing column '{name}' (found {header})")
    cols: dict[str, list[str]] = {name: [] for name in header}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: row {i} has {len(row)} fields, header has {len(header)}"
            )
        for name, val in zip(header, row):
            cols[name].append(val)
    if not rows[1:]:
        raise SchemaError(f"{path}: no data rows")
    return cols


def numeric(cols: dict[str, list[str]], name: str, path: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in cols[name]])
    except ValueError as exc:
        raise SchemaError(f"{path}: column '{name}' has a non-numeric value ({exc})")


def pivot_grid(
    v: np.ndarray, eta: np.ndarray, z: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrange long-format (v, eta, z) rows into a 2-D grid for plotting.

    Cells absent from the file are left as NaN; values are never invented.
    """
    vs = np.unique(v)
    es = np.unique(eta)
    grid = np.full((len(es), len(vs)), np.nan)
    vi = {val: i for i, val in enumerate(vs)}
    ei = {val: i for i, val in enumerate(es)}
    for vk, ek, zk in zip(v, eta, z):
        grid[ei[ek], vi[vk]] = zk
    return vs, es, grid


# ---------------------------------------------------------------------------
# Figure kinds.


def fig_hist_fit(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("bin_left", "bin_right", "count", "expected_count"))
    left = numeric(cols, "bin_left", path)
    right = numeric(cols, "bin_right", path)
    count = numeric(cols, "count", path)
    expected = numeric(cols, "expected_count", path)
    centers = 0.5 * (left + right)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(
        centers,
        count,
        width=right - left,
        color="#9ecae1",
        edgecolor="#3182bd",
        linewidth=0.4,
        label="observed",
    )
    ax.plot(centers, expected, color="#d62728", linewidth=2.0, label="Gaussian fit")
    ax.set_xlabel("gap (m)")
    ax.set_ylabel("samples per bin")
    ax.set_title("Steady-state gap distribution")
    ax.legend(frameon=False)
    return fig


def fig_p_heatmap(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("v", "eta", "log10_p"))
    v = numeric(cols, "v", path)
    eta = numeric(cols, "eta", path)
    logp = numeric(cols, "log10_p", path)
    vs, es, grid = pivot_grid(v, eta, logp)
    v_kmh = vs * MPS_TO_KMH
    fig, ax = plt.subplots(figsize=(7.5, 5))
    mesh = ax.pcolormesh(v_kmh, es, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$\log_{10} p$")
    # Iso-distance guide lines: along each curve the product of speed and
    # headway (the mean gap, in metres) is constant.
    v_dense = np.linspace(vs.min(), vs.max(), 400)
    for dist in ISO_DISTANCES_M:
        eta_line = dist / v_dense
        mask = (eta_line >= es.min()) & (eta_line <= es.max())
        if not mask.any():
            continue
        ax.plot(v_dense[mask] * MPS_TO_KMH, eta_line[mask], color="red", linewidth=1.2)
        mid = np.flatnonzero(mask)[len(np.flatnonzero(mask)) // 2]
        ax.annotate(
            f"$v\\eta$ = {dist:.0f} m",
            (v_dense[mid] * MPS_TO_KMH, eta_line[mid]),
            color="red",
            fontsize=8,
            ha="left",
            va="bottom",
        )
    ax.set_xlim(v_kmh.min(), v_kmh.max())
    ax.set_ylim(es.min(), es.max())
    ax.set_xlabel("speed (km/h)")
    ax.set_ylabel("headway $\\eta$ (s)")
    ax.set_title("Collision probability (log scale) with iso-distance lines")
    return fig


def fig_cic_surface(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("v", "eta", "s"))
    v = numeric(cols, "v", path)
    eta = numeric(cols, "eta", path)
    s = numeric(cols, "s", path)
    vs, es, grid = pivot_grid(v, eta, s)
    v_kmh = vs * MPS_TO_KMH
    fig = plt.figure(figsize=(11, 4.8))
    ax3 = fig.add_subplot(1, 2, 1, projection="3d")
    vv, ee = np.meshgrid(v_kmh, es)
    ax3.plot_surface(vv, ee, grid, cmap="viridis", edgecolor="none", antialiased=True)
    ax3.set_xlabel("speed (km/h)")
    ax3.set_ylabel("headway $\\eta$ (s)")
    ax3.set_zlabel("throughput s")
    ax3.set_title("Collision-inclusive capacity")
    ax2 = fig.add_subplot(1, 2, 2)
    filled = ax2.contourf(v_kmh, es, grid, levels=24, cmap="viridis")
    fig.colorbar(filled, ax=ax2, label="throughput s")
    ax2.set_xlabel("speed (km/h)")
    ax2.set_ylabel("headway $\\eta$ (s)")
    ax2.set_title("2-D projection")
    fig.tight_layout()
    return fig


def fig_opt_curve(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("v", "eta_dagger", "binding", "p", "s"))
    v = numeric(cols, "v", path) * MPS_TO_KMH
    eta = numeric(cols, "eta_dagger", path)
    s = numeric(cols, "s", path)
    binding = np.array(cols["binding"])
    starred = binding == "constraint-binding"
    fig, (ax_s, ax_e) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    ax_s.plot(v, s, color="#444444", linewidth=1.2)
    ax_e.plot(v, eta, color="#444444", linewidth=1.2)
    for ax, y in ((ax_s, s), (ax_e, eta)):
        if starred.any():
            ax.plot(
                v[starred],
                y[starred],
                "*",
                color="#d62728",
                markersize=9,
                linestyle="none",
                label="constraint-binding",
            )
        if (~starred).any():
            ax.plot(
                v[~starred],
                y[~starred],
                "o",
                color="#1f77b4",
                markersize=4,
                linestyle="none",
                label="interior-stationary",
            )
    ax_s.set_ylabel("optimal throughput s")
    ax_s.set_title("Capacity-optimal headway by speed")
    ax_s.legend(frameon=False)
    ax_e.set_ylabel("optimal headway $\\eta^\\dagger$ (s)")
    ax_e.set_xlabel("speed (km/h)")
    fig.tight_layout()
    return fig


def fig_feasible_region(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("v", "eta", "s"))
    v = numeric(cols, "v", path)
    eta = numeric(cols, "eta", path)
    s = numeric(cols, "s", path)
    vs, es, grid = pivot_grid(v, eta, s)
    v_kmh = vs * MPS_TO_KMH
    finite = grid[np.isfinite(grid)]
    threshold = args.threshold if args.threshold is not None else 0.8 * finite.max()
    fig, ax = plt.subplots(figsize=(7.5, 5))
    filled = ax.contourf(v_kmh, es, grid, levels=24, cmap="cividis")
    fig.colorbar(filled, ax=ax, label="throughput s")
    feasible = np.where(np.isfinite(grid), grid >= threshold, False).astype(float)
    if feasible.any():
        ax.contourf(
            v_kmh,
            es,
            feasible,
            levels=[0.5, 1.5],
            colors="none",
            hatches=["///"],
        )
        boundary = ax.contour(
            v_kmh, es, feasible, levels=[0.5], colors="red", linewidths=1.8
        )
        ax.clabel(boundary, fmt={0.5: f"s ≥ {threshold:.3g}"}, fontsize=9)
    ax.set_xlabel("speed (km/h)")
    ax.set_ylabel("headway $\\eta$ (s)")
    ax.set_title(f"Feasible region (throughput floor {threshold:.3g})")
    return fig


def fig_extension_compare(path: str, args) -> plt.Figure:
    cols = read_columns(path, ("eta", "s_baseline", "s_overlap", "s_two_lane"))
    eta = numeric(cols, "eta", path)
    series = (
        ("s_baseline", "baseline", "#1f77b4", "-"),
        ("s_overlap", "overlap-corrected", "#d62728", "--"),
        ("s_two_lane", "two-lane", "#2ca02c", ":"),
    )
    fig, ax = plt.subplots(figsize=(7.5, 4.8))
    for name, label, color, style in series:
        ax.plot(
            eta,
            numeric(cols, name, path),
            style,
            color=color,
            linewidth=1.8,
            label=label,
        )
    ax.set_xlabel("headway $\\eta$ (s)")
    ax.set_ylabel("throughput s")
    ax.set_title("Throughput model comparison")
    ax.legend(frameon=False)
    return fig


RENDERERS = {
    "hist_fit": fig_hist_fit,
    "p_heatmap": fig_p_heatmap,
    "cic_surface": fig_cic_surface,
    "opt_curve": fig_opt_curve,
    "feasible_region": fig_feasible_region,
    "extension_compare": fig_extension_compare,
}


# ---------------------------------------------------------------------------
# Command line.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render.py",
        description="Render a figure from a capacity-toolkit CSV file.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="infile", required=True, help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path (.png/.svg/.pdf)")
    parser.add_argument("--dpi", type=int, default=150, help="raster resolution")
    parser.add_argument(
        "--threshold",
        type=float,
        default=None,
        help="throughput floor for feasible_region (default: 80%% of the file's max)",
    )
    return parser


def render(kind: str, infile: str, out: str, args) -> None:
    fig = RENDERERS[kind](infile, args)
    fig.savefig(out, dpi=args.dpi)
    plt.close(fig)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.infile, args.out, args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
