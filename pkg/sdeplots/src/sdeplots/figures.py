"""Figure builders over the canonical results.csv schema.

Five kinds, all reading the fixed header

    experiment,drift,noise_a,noise_b,R,eps,dt,t,estimate,stderr,M,seed,walltime_s

* ``scaling``  log-log estimate vs eps, optional reference-slope overlay
* ``cauchy``   log-log estimate vs R (consecutive-level distances)
* ``order``    log-log estimate vs dt (strong-convergence order)
* ``fan``      estimate vs t, one line per trajectory (split where t resets)
* ``margins``  histogram of the estimate column (Gronwall margins)

Rendering is a pure function of the CSV bytes and the spec: estimates are
never recomputed here, and nothing is fetched from anywhere else.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class PlotError(Exception):
    """Base class for figure errors."""


class SchemaError(PlotError):
    """The CSV lacks a column the figure kind requires."""

    def __init__(self, column: str):
        super().__init__(f"input CSV is missing required column {column!r}")
        self.column = column


class EmptyInputError(PlotError):
    """The CSV has no usable data rows for the requested kind."""


KINDS = ("scaling", "cauchy", "order", "fan", "margins")

_X_COLUMN = {"scaling": "eps", "cauchy": "R", "order": "dt", "fan": "t"}
_LOG_KINDS = ("scaling", "cauchy", "order")
_X_LABEL = {"scaling": "eps", "cauchy": "truncation level R", "order": "dt"}


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    out_path: str
    ref_slope: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; known: {KINDS}")


def load_rows(csv_path: str, required: Tuple[str, ...]) -> List[dict]:
    """Rows with every required column parsed as float; header validated."""
    path = Path(csv_path)
    if not path.is_file():
        raise PlotError(f"input CSV not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for column in required:
            if column not in fields:
                raise SchemaError(column)
        rows = []
        for raw in reader:
            try:
                parsed = {col: float(raw[col]) for col in required}
            except (TypeError, ValueError):
                continue  # inapplicable coordinate left empty for this row
            parsed["experiment"] = raw.get("experiment", "")
            rows.append(parsed)
    if not rows:
        raise EmptyInputError(f"{path} has no rows with the columns {required}")
    return rows


def _split_trajectories(rows: List[dict]) -> List[List[dict]]:
    """Fan rows arrive as blocks of increasing t; a t-reset starts a line."""
    groups: List[List[dict]] = []
    current: List[dict] = []
    last_t = -math.inf
    for row in rows:
        if row["t"] < last_t and current:
            groups.append(current)
            current = []
        current.append(row)
        last_t = row["t"]
    if current:
        groups.append(current)
    return groups


def build_figure(spec: FigureSpec) -> "plt.Figure":
    """Build (but do not save) the matplotlib figure for a spec."""
    if spec.kind == "margins":
        rows = load_rows(spec.csv_path, ("estimate",))
        values = np.array([r["estimate"] for r in rows])
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.hist(values, bins="auto", color="#4878a8", edgecolor="white")
        ax.axvline(1.0, color="#b04030", linestyle="--", label="margin = 1")
        ax.set_xlabel("verification margin")
        ax.set_ylabel("instances")
        ax.set_title(rows[0]["experiment"] or "margins")
        ax.legend()
        fig.tight_layout()
        return fig

    if spec.kind == "fan":
        rows = load_rows(spec.csv_path, ("t", "estimate"))
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for block in _split_trajectories(rows):
            ax.plot(
                [r["t"] for r in block],
                [r["estimate"] for r in block],
                linewidth=1.2,
            )
        ax.set_xlabel("t")
        ax.set_ylabel("X(t)")
        ax.set_title(rows[0]["experiment"] or "trajectories")
        fig.tight_layout()
        return fig

    x_col = _X_COLUMN[spec.kind]
    rows = load_rows(spec.csv_path, (x_col, "estimate"))
    pts = sorted((r[x_col], r["estimate"]) for r in rows)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise EmptyInputError(
            f"{spec.kind} needs positive {x_col} and estimate values"
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(xs, ys, marker="o", color="#4878a8", label="estimate")
    if spec.ref_slope is not None:
        ref = ys[0] * (xs / xs[0]) ** spec.ref_slope
        ax.loglog(
            xs,
            ref,
            linestyle="--",
            color="#b04030",
            label=f"slope {spec.ref_slope:g} reference",
        )
    ax.set_xlabel(_X_LABEL[spec.kind])
    ax.set_ylabel("estimate")
    ax.set_title(rows[0]["experiment"] or spec.kind)
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Build the figure and write it to the spec's output path."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    return out
