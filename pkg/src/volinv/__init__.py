"""Invertibility diagnostics, filtering and constrained QLIK estimation for
EGARCH(1,1) and GARCH(1,1)."""

from .asymptotics import (
    AsymptoticReport,
    InnovationMoments,
    asymptotic_report,
    asymptotic_variance,
    b_diag_closed_form,
    b_matrix_mc,
    b_matrix_moments,
    check_mm_prime,
    innovation_moments,
)
from .estimate import FitOptions, FitResult, InfeasibleError, fit, profile
from .filtering import FilterTrajectory, forecast, qlik, run_filter
from .invertibility import LyapunovReport, empirical_lyapunov, model_implied_lyapunov, region_scan
from .models import InnovationDist, ModelKind, ParamBox, ParamVector
from .simulate import Path, simulate
from .study import StudyConfig, run_study

__all__ = [
    "AsymptoticReport",
    "FilterTrajectory",
    "FitOptions",
    "FitResult",
    "InfeasibleError",
    "InnovationDist",
    "InnovationMoments",
    "LyapunovReport",
    "ModelKind",
    "ParamBox",
    "ParamVector",
    "Path",
    "StudyConfig",
    "asymptotic_report",
    "asymptotic_variance",
    "b_diag_closed_form",
    "b_matrix_mc",
    "b_matrix_moments",
    "check_mm_prime",
    "empirical_lyapunov",
    "fit",
    "forecast",
    "innovation_moments",
    "model_implied_lyapunov",
    "profile",
    "qlik",
    "region_scan",
    "run_filter",
    "run_study",
    "simulate",
]
