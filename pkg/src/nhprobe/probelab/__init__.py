"""Experiment orchestration: velocity sweeps, gain/loss scans, figure data, CLI."""

from .reproduce import FIGURES, UnknownFigureError, reproduce
from .sweep import (
    SweepOptions,
    SweepResult,
    TransitionScan,
    critical_delta,
    kink_mask,
    lambda0_theory,
    parabolic_peak,
    scan_delta_model3,
    sweep_lyapunov,
    velocity_grid,
)

__all__ = [
    "FIGURES",
    "SweepOptions",
    "SweepResult",
    "TransitionScan",
    "UnknownFigureError",
    "critical_delta",
    "kink_mask",
    "lambda0_theory",
    "parabolic_peak",
    "reproduce",
    "scan_delta_model3",
    "sweep_lyapunov",
    "velocity_grid",
]
