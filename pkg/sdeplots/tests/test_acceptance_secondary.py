"""End-to-end: render every figure kind from real experiment outputs.

Drives the producing package only through its public surfaces: the
``sdelab`` CLI and the results.csv files it writes.  Heavy experiments run
at the shipped smoke scale; the schema and semantics are identical to the
full-scale configs.
"""

import csv
import shutil
import subprocess
from pathlib import Path

import pytest

from sdeplots import FigureSpec, build_figure, render

REPO_ROOT = Path(__file__).resolve().parents[2]
SMOKE = REPO_ROOT / "configs" / "smoke"

RUNS = (
    "exact_characteristic",
    "deterministic_collapse",
    "verhulst",
    "exp_moment",
    "truncation_convergence",
    "cauchy_in_r",
    "moment_uniformity",
    "gronwall",
)

FIGURES = (
    ("scaling", "exp_moment", -0.5),
    ("cauchy", "cauchy_in_r", None),
    ("cauchy", "truncation_convergence", None),
    ("cauchy", "moment_uniformity", None),
    ("order", "exact_characteristic", None),
    ("fan", "deterministic_collapse", None),
    ("margins", "gronwall", None),
)


@pytest.fixture(scope="module")
def produced(tmp_path_factory):
    if shutil.which("sdelab") is None:
        pytest.fail("sdelab CLI is not installed; install the producing package")
    base = tmp_path_factory.mktemp("produced")
    for name in RUNS:
        out = base / name
        proc = subprocess.run(
            [
                "sdelab",
                "run",
                "--config",
                str(SMOKE / f"{name}.toml"),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, f"{name} failed:\n{proc.stdout}\n{proc.stderr}"
        assert (out / "results.csv").is_file()
    return base


def test_all_figure_kinds_render(produced, tmp_path):
    for kind, run, ref in FIGURES:
        out = tmp_path / f"{run}_{kind}.png"
        path = render(
            FigureSpec(
                csv_path=str(produced / run / "results.csv"),
                kind=kind,
                out_path=str(out),
                ref_slope=ref,
            )
        )
        assert path.exists() and path.stat().st_size > 0, (kind, run)


def test_scaling_figure_draws_reference_slope(produced, tmp_path):
    fig = build_figure(
        FigureSpec(
            csv_path=str(produced / "exp_moment" / "results.csv"),
            kind="scaling",
            out_path=str(tmp_path / "scaling.png"),
            ref_slope=-0.5,
        )
    )
    labels = [line.get_label() for line in fig.axes[0].lines]
    assert any("slope -0.5 reference" in label for label in labels)


def test_fan_data_collapses_before_plotting(produced, tmp_path):
    # the noise-free ramp trajectories must all reach ~0 at the final time
    csv_path = produced / "deterministic_collapse" / "results.csv"
    with open(csv_path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["t"]]
    final_t = max(float(r["t"]) for r in rows)
    finals = [abs(float(r["estimate"])) for r in rows if float(r["t"]) == final_t]
    assert finals and all(v < 0.01 for v in finals)
    render(
        FigureSpec(
            csv_path=str(csv_path),
            kind="fan",
            out_path=str(tmp_path / "fan.png"),
        )
    )


def test_margins_histogram_floor(produced, tmp_path):
    fig = build_figure(
        FigureSpec(
            csv_path=str(produced / "gronwall" / "results.csv"),
            kind="margins",
            out_path=str(tmp_path / "margins.png"),
        )
    )
    patches = fig.axes[0].patches
    assert min(p.get_x() for p in patches) >= 1.0
