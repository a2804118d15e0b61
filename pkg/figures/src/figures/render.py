"""Batch renderer for the twelve splitting-efficiency figure panels.

Consumes only the simulator's documented artifacts: sweep CSV surfaces,
peak JSON records, and shape-optimization JSON (with its sampled profile
CSV written alongside). Rendering is read-only over the artifacts and
reruns are idempotent.

Panels:
    2a 2c 3a 3c  efficiency heatmaps over (bandwidth, theta) with the
                 peak marker and a contour at the bare-emitter limit
    2b 2d 3b 3d  bandwidth cross-sections, tuned vs bare
    4a 4b        best efficiency versus basis size, with the optimal
                 profile inset when the sampled CSV sits next to the JSON
    4c 4d        squared shape coefficients per basis mode
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class ArtifactError(RuntimeError):
    """An input artifact is missing, incomplete, or does not parse."""


SURFACE_COLUMNS = ["bandwidth", "theta", "phi_opt", "P_S", "err"]

HEATMAP_PANELS = ("2a", "2c", "3a", "3c")
SLICE_PANELS = ("2b", "2d", "3b", "3d")
CURVE_PANELS = ("4a", "4b")
BAR_PANELS = ("4c", "4d")
PANELS = HEATMAP_PANELS + SLICE_PANELS + CURVE_PANELS + BAR_PANELS

# default contour on each heatmap: the bare-emitter peak of that family,
# i.e. the efficiency reachable without the interferometer
CONTOUR_LEVELS = {"2a": 0.67, "2c": 0.64, "3a": 0.79, "3c": 0.77}


@dataclass
class FigureSpec:
    """One panel: its artifacts, contour level, and output image path."""

    panel: str
    data: str
    out: str
    peak: str | None = None
    contour: float | None = None

    def __post_init__(self):
        if self.panel not in PANELS:
            raise ValueError(f"unknown panel {self.panel!r}; "
                             f"expected one of {', '.join(PANELS)}")
        if self.contour is None:
            self.contour = CONTOUR_LEVELS.get(self.panel)


# ---------------------------------------------------------------------------
# Artifact readers.

def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ArtifactError(str(exc)) from None
    if not rows:
        raise ArtifactError(f"{path}: empty file")
    return rows


def load_surface(path):
    """Sweep CSV -> (bandwidths, thetas, P_S grid with thetas as rows)."""
    rows = _read_rows(path)
    if rows[0] != SURFACE_COLUMNS:
        raise ArtifactError(f"{path}: expected header "
                            f"{','.join(SURFACE_COLUMNS)}, got {rows[0]!r}")
    if len(rows) == 1:
        raise ArtifactError(f"{path}: no data rows")
    try:
        data = np.array(rows[1:], dtype=float)
    except ValueError as exc:
        raise ArtifactError(f"{path}: non-numeric row ({exc})") from None
    if data.shape[1] != len(SURFACE_COLUMNS):
        raise ArtifactError(f"{path}: ragged rows")
    bands = np.unique(data[:, 0])
    thetas = np.unique(data[:, 1])
    if bands.size * thetas.size != data.shape[0]:
        raise ArtifactError(f"{path}: rows do not fill a full "
                            f"bandwidth x theta grid")
    grid = np.full((thetas.size, bands.size), np.nan)
    grid[np.searchsorted(thetas, data[:, 1]),
         np.searchsorted(bands, data[:, 0])] = data[:, 3]
    return bands, thetas, grid


def load_json(path, required):
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ArtifactError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: invalid JSON ({exc})") from None
    missing = [key for key in required if key not in payload]
    if missing:
        raise ArtifactError(f"{path}: missing keys {missing}")
    return payload


def load_profile(path):
    rows = _read_rows(path)
    if rows[0] != ["s", "profile"]:
        raise ArtifactError(f"{path}: expected header s,profile")
    try:
        data = np.array(rows[1:], dtype=float)
    except ValueError as exc:
        raise ArtifactError(f"{path}: non-numeric row ({exc})") from None
    return data[:, 0], data[:, 1]


# ---------------------------------------------------------------------------
# Panel painters. All file access happens in the readers, called before
# anything is drawn, so a bad artifact fails with no image written.

def _paint_heatmap(ax, spec):
    bands, thetas, grid = load_surface(spec.data)
    if spec.peak is None:
        raise ArtifactError(f"panel {spec.panel} needs the peak JSON "
                            f"for its maximum marker (--peak)")
    peak = load_json(spec.peak, required=("bandwidth", "theta", "P_S"))
    mesh = ax.pcolormesh(bands, thetas / math.pi, grid, cmap="viridis",
                         shading="nearest")
    ax.figure.colorbar(mesh, ax=ax, label="splitting efficiency")
    finite = grid[np.isfinite(grid)]
    if spec.contour is not None and finite.size \
            and finite.min() < spec.contour < finite.max():
        ax.contour(bands, thetas / math.pi, grid, levels=[spec.contour],
                   colors="orange", linewidths=1.2)
    ax.plot(peak["bandwidth"], peak["theta"] / math.pi, marker="x",
            color="red", markersize=9, markeredgewidth=2.0)
    ax.set_xlabel("bandwidth (units of the decay rate)")
    ax.set_ylabel(r"$\theta/\pi$")


def _paint_slice(ax, spec):
    bands, thetas, grid = load_surface(spec.data)
    tuned = np.nanmax(grid, axis=0)
    bare = grid[int(np.argmin(np.abs(thetas)))]
    ax.plot(bands, tuned, color="tab:blue", label="tuned interferometer")
    ax.plot(bands, bare, color="tab:gray", linestyle="--",
            label="bare emitter")
    if spec.peak is not None:
        peak = load_json(spec.peak, required=("bandwidth", "P_S"))
        ax.plot(peak["bandwidth"], peak["P_S"], "o", color="red",
                markersize=5)
    ax.set_xlabel("bandwidth (units of the decay rate)")
    ax.set_ylabel("splitting efficiency")
    ax.legend(frameon=False)


def _paint_curve(ax, spec):
    payload = load_json(spec.data, required=("convergence", "eigenvalue"))
    curve = np.asarray(payload["convergence"], dtype=float)
    if curve.ndim != 2 or curve.shape[1] != 2:
        raise ArtifactError(f"{spec.data}: convergence must be "
                            f"[order, value] pairs")
    nmodes = curve[:, 0] // 2 + 1
    ax.plot(nmodes, curve[:, 1], marker="o", markersize=3)
    ax.set_xlabel("basis elements")
    ax.set_ylabel("best splitting efficiency")

    base, _ = os.path.splitext(spec.data)
    profile_path = base + "-profile.csv"
    if os.path.exists(profile_path):
        s, values = load_profile(profile_path)
        inset = ax.inset_axes([0.45, 0.12, 0.5, 0.4])
        inset.plot(s, values, color="tab:green")
        inset.set_xlabel("time separation", fontsize=7)
        inset.set_ylabel("optimal profile", fontsize=7)
        inset.tick_params(labelsize=6)


def _paint_bars(ax, spec):
    payload = load_json(spec.data, required=("alpha",))
    weights = np.asarray(payload["alpha"], dtype=float) ** 2
    if weights.ndim != 1 or weights.size == 0:
        raise ArtifactError(f"{spec.data}: alpha must be a flat "
                            f"coefficient list")
    ax.bar(np.arange(weights.size), weights, color="tab:blue")
    ax.annotate(f"{weights[0]:.3f}", (0, float(weights[0])),
                textcoords="offset points", xytext=(4, 2), fontsize=8)
    ax.set_xlabel("basis mode index")
    ax.set_ylabel("squared coefficient")


def _painter(panel):
    if panel in HEATMAP_PANELS:
        return _paint_heatmap
    if panel in SLICE_PANELS:
        return _paint_slice
    if panel in CURVE_PANELS:
        return _paint_curve
    return _paint_bars


def render(spec):
    """Render one panel to spec.out and return that path."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6), layout="constrained")
    try:
        _painter(spec.panel)(ax, spec)
        ax.set_title(f"panel {spec.panel}", fontsize=10)
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out


# ---------------------------------------------------------------------------

def run(argv=None):
    parser = argparse.ArgumentParser(
        prog="photonsplit-figures",
        description="Regenerate one figure panel from simulator artifacts")
    parser.add_argument("--panel", required=True, choices=PANELS)
    parser.add_argument("--data", required=True,
                        help="sweep CSV for panels 2*/3*, shape JSON for 4*")
    parser.add_argument("--peak",
                        help="peak JSON (required for heatmap panels)")
    parser.add_argument("--contour", type=float,
                        help="override the default contour level")
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = FigureSpec(args.panel, args.data, args.out,
                          peak=args.peak, contour=args.contour)
        render(spec)
    except (ArtifactError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(spec.out)
    return 0


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
