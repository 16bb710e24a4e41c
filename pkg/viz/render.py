#!/usr/bin/env python3
"""Render experiment CSV outputs into figures.

Usage: render.py <kind> <csv> <out.png>

Kinds:
    inflation_slope   log-log growth-ratio scatter with fitted and reference slopes
    conservation      relative drift of the two conserved quantities over time
    ratio_heatmap     worst estimate ratios over a two-parameter sweep grid

These scripts consume the CSV files (plus, when present, the sibling
manifest.json) and never recompute any physics.  Output is deterministic for
fixed input: fixed figure geometry, no timestamps.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("inflation_slope", "conservation", "ratio_heatmap")

FIGURE_KW = dict(figsize=(6.4, 4.8), dpi=110)
SAVE_KW = dict(metadata={"Software": "qdnls-viz"})


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: Path
    out_path: Path

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; pick from {KINDS}")


def read_rows(path: Path, required: tuple[str, ...]) -> list[dict]:
    if not path.exists():
        raise ValueError(f"input CSV {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [col for col in required if col not in header]
        if missing:
            raise ValueError(f"CSV {path} is missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"CSV {path} holds no data rows")
    return rows


def fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    lx, ly = np.log(x), np.log(y)
    return float(np.polyfit(lx, ly, 1)[0])


def sibling_manifest_slope(csv_path: Path):
    manifest = csv_path.parent / "manifest.json"
    if manifest.exists():
        try:
            payload = json.loads(manifest.read_text())
            return payload.get("results", {}).get("slope")
        except (OSError, json.JSONDecodeError):
            return None
    return None


def plot_inflation(spec: FigureSpec) -> float:
    """Scatter of log ratio against log N with the fitted and reference slopes.

    Returns the locally refitted slope (also annotated on the figure); when a
    manifest sits next to the CSV, its authoritative slope is shown alongside.
    """
    rows = read_rows(spec.csv_path, ("N", "ratio", "s"))
    n_vals = np.array([float(r["N"]) for r in rows])
    ratios = np.array([float(r["ratio"]) for r in rows])
    if len(rows) < 3:
        raise ValueError("inflation plot needs at least 3 rows")
    s = float(rows[0]["s"])
    slope = fit_slope(n_vals, ratios)
    manifest_slope = sibling_manifest_slope(spec.csv_path)

    fig, ax = plt.subplots(**FIGURE_KW)
    ax.loglog(n_vals, ratios, "o", label="measured growth ratio")
    anchor = ratios[0]
    ax.loglog(n_vals, anchor * (n_vals / n_vals[0]) ** slope, "-",
              label=f"fit: slope {slope:.2f}")
    ax.loglog(n_vals, anchor * (n_vals / n_vals[0]) ** (-2 * s), "--",
              label=f"reference slope {-2 * s:g}")
    note = f"local refit slope = {slope:.2f}"
    if manifest_slope is not None:
        note = f"manifest slope = {manifest_slope:.2f}\n" + note
    ax.text(0.04, 0.96, note, transform=ax.transAxes, va="top", fontsize=9)
    ax.set_xlabel("N")
    ax.set_ylabel("third-iterate growth ratio")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, **SAVE_KW)
    plt.close(fig)
    return slope


def plot_conservation(spec: FigureSpec) -> None:
    rows = read_rows(spec.csv_path, ("t", "Q1", "Q2"))
    t = np.array([float(r["t"]) for r in rows])
    q1 = np.array([float(r["Q1"]) for r in rows])
    q2 = np.array([float(r["Q2"]) for r in rows])
    fig, ax = plt.subplots(**FIGURE_KW)
    for q, label in ((q1, "|u|^2 + |v|^2"), (q2, "|u|^2 + |w|^2")):
        base = q[0] if q[0] != 0 else 1.0
        ax.plot(t, (q - q[0]) / base, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, **SAVE_KW)
    plt.close(fig)


def plot_ratio_heatmap(spec: FigureSpec, x_col: str = "N3", y_col: str = "N1",
                       value_col: str = "max_ratio") -> tuple[int, int]:
    rows = read_rows(spec.csv_path, (x_col, y_col, value_col))
    xs = sorted({float(r[x_col]) for r in rows if r[x_col]})
    ys = sorted({float(r[y_col]) for r in rows if r[y_col]})
    grid = np.full((len(ys), len(xs)), np.nan)
    for r in rows:
        if not r[x_col] or not r[y_col]:
            continue
        i = ys.index(float(r[y_col]))
        j = xs.index(float(r[x_col]))
        v = float(r[value_col])
        if np.isnan(grid[i, j]) or v > grid[i, j]:
            grid[i, j] = v
    fig, ax = plt.subplots(**FIGURE_KW)
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{v:g}" for v in xs])
    ax.set_yticks(range(len(ys)), [f"{v:g}" for v in ys])
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    fig.colorbar(im, ax=ax, label=value_col)
    fig.tight_layout()
    fig.savefig(spec.out_path, **SAVE_KW)
    plt.close(fig)
    return grid.shape


def render(kind: str, csv_path: str, out_path: str):
    spec = FigureSpec(kind, Path(csv_path), Path(out_path))
    if kind == "inflation_slope":
        return plot_inflation(spec)
    if kind == "conservation":
        return plot_conservation(spec)
    return plot_ratio_heatmap(spec)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    try:
        render(*argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
