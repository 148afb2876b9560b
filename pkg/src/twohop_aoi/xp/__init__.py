"""Experiment harness: verification, sweeps, CSV/SVG output and the CLI."""

from .experiment import (
    PRESETS,
    SweepRow,
    SweepSpec,
    point_seed,
    reduction,
    run_sweep,
    solver_aoi,
    solver_moments,
    verify,
)
from .output import emit_csv, emit_plot, plot_series, read_csv

__all__ = [
    "PRESETS",
    "SweepRow",
    "SweepSpec",
    "emit_csv",
    "emit_plot",
    "plot_series",
    "point_seed",
    "read_csv",
    "reduction",
    "run_sweep",
    "solver_aoi",
    "solver_moments",
    "verify",
]
